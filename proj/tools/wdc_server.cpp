#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "httplib.h"

#include "wdc/service.hpp"

namespace {

httplib::Server* g_server = nullptr;

void stop(int)
{
    if (g_server)
        g_server->stop();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"EWDC scribble session service"};
    std::string host = "127.0.0.1";
    int port = 8080;
    int idle_minutes = 30;
    std::string static_dir;
    app.add_option("--host", host, "Bind address");
    app.add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
    app.add_option("--idle-minutes", idle_minutes, "Evict sessions idle this long")->check(CLI::PositiveNumber);
    app.add_option("--static", static_dir, "Serve a built UI from this directory")->check(CLI::ExistingDirectory);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    wdc::ServiceOptions options;
    options.idle_timeout = std::chrono::minutes(idle_minutes);
    wdc::SessionService service(options);
    httplib::Server server;
    wdc::install_routes(server, service);
    if (!static_dir.empty())
        server.set_mount_point("/", static_dir);

    std::atomic<bool> running{true};
    std::thread janitor([&] {
        while (running) {
            std::this_thread::sleep_for(std::chrono::seconds(1));
            static int ticks = 0;
            if (++ticks % 60 == 0)
                service.evict_idle();
        }
    });

    g_server = &server;
    std::signal(SIGINT, stop);
    std::signal(SIGTERM, stop);
    std::cerr << "wdc-server listening on " << host << ":" << port << "\n";
    const bool ok = server.listen(host, port);
    running = false;
    janitor.join();
    if (!ok) {
        std::cerr << "wdc-server: cannot listen on " << host << ":" << port << "\n";
        return 1;
    }
    return 0;
}
