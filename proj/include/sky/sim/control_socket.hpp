#pragma once

// Local control socket: newline-delimited "pause" / "resume" / "step N" /
// "quit" commands feeding the kernel's control queue. Unix domain socket so
// concurrent runs never fight over ports.

#include <atomic>
#include <string>
#include <thread>

#include "sky/sim/kernel.hpp"

namespace sky::sim {

class ControlSocket {
 public:
  // Binds and starts the accept loop. Throws SimError on bind failure.
  ControlSocket(Kernel& kernel, std::string socket_path);
  ~ControlSocket();

  ControlSocket(const ControlSocket&) = delete;
  ControlSocket& operator=(const ControlSocket&) = delete;

  const std::string& path() const { return path_; }

 private:
  void serve();

  Kernel& kernel_;
  std::string path_;
  int listen_fd_{-1};
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

}  // namespace sky::sim
