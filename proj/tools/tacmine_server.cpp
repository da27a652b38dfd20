#include <csignal>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "tacmine/error.hpp"
#include "tacmine/service.hpp"

namespace {
tacmine::HttpServer* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tacmine HTTP service"};
  std::string config_file;
  std::optional<std::string> host, data_dir;
  std::optional<int> port;
  app.add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--host", host, "Listen address (overrides config and environment)");
  app.add_option("--port", port, "Listen port, 0 picks a free one");
  app.add_option("--data-dir", data_dir, "Directory for datasets and sessions");
  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = tacmine::load_service_config(config_file.empty() ? std::nullopt
                                                                : std::optional<std::filesystem::path>(config_file));
    if (host) cfg.host = *host;
    if (port) cfg.port = *port;
    if (data_dir) cfg.data_dir = *data_dir;
    cfg.validate();
    tacmine::Api api(cfg);
    tacmine::HttpServer server(api);
    const int bound = server.bind(cfg.host, cfg.port);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "listening on " << cfg.host << ":" << bound << ", data in " << cfg.data_dir.string() << std::endl;
    server.listen();
    g_server = nullptr;
  } catch (const tacmine::Error& e) {
    std::cerr << "error [" << tacmine::to_string(e.code()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
