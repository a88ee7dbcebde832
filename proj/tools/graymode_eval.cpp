#include <csignal>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "graymode/eval/service.hpp"

namespace {
httplib::Server* g_server = nullptr;
void stop(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage mosaic evaluation service", "graymode-eval"};
  std::string config_path;
  std::string host;
  int port = 0;
  app.add_option("--config", config_path, "Service configuration JSON")->required();
  app.add_option("--host", host, "Override listen address");
  app.add_option("--port", port, "Override listen port");
  CLI11_PARSE(app, argc, argv);

  try {
    auto config = graymode::eval::ServiceConfig::load(config_path);
    if (!host.empty()) config.host = host;
    if (port > 0) config.port = port;
    graymode::eval::EvalService service(config);
    httplib::Server server;
    graymode::eval::register_routes(server, service);
    g_server = &server;
    std::signal(SIGINT, stop);
    std::signal(SIGTERM, stop);
    std::cerr << "graymode-eval: " << service.image_set_ids().size() << " image set(s), listening on "
              << config.host << ':' << config.port << '\n';
    if (!server.listen(config.host, config.port)) {
      std::cerr << "graymode-eval: cannot listen on " << config.host << ':' << config.port << '\n';
      return 3;
    }
  } catch (const graymode::IoError& e) {
    std::cerr << "graymode-eval: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "graymode-eval: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
