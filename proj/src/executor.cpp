#include "valsim/executor.hpp"

#include <csignal>

namespace valsim {
namespace {

CancelToken g_token;

extern "C" void on_signal(int) { g_token.request(); }

}  // namespace

CancelToken& process_cancel_token() { return g_token; }

void install_signal_handlers() {
  struct sigaction sa {};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
}

}  // namespace valsim
