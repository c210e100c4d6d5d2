#include "spectube/log.hpp"

#include <iostream>
#include <mutex>

namespace spectube {

namespace {
std::mutex g_mutex;
std::vector<std::string> g_notices;
bool g_echo = false;
} // namespace

void notice(const std::string& message) {
    std::lock_guard lock(g_mutex);
    g_notices.push_back(message);
    if (g_echo) std::cerr << "notice: " << message << '\n';
}

std::vector<std::string> take_notices() {
    std::lock_guard lock(g_mutex);
    return std::exchange(g_notices, {});
}

void set_notice_echo(bool echo) {
    std::lock_guard lock(g_mutex);
    g_echo = echo;
}

} // namespace spectube
