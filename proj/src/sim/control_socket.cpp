#include "sky/sim/control_socket.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cstring>

namespace sky::sim {

ControlSocket::ControlSocket(Kernel& kernel, std::string socket_path)
    : kernel_(kernel), path_(std::move(socket_path)) {
  listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw SimError("control socket: socket() failed");

  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path_.size() >= sizeof(addr.sun_path))
    throw SimError("control socket path too long: " + path_);
  std::strncpy(addr.sun_path, path_.c_str(), sizeof(addr.sun_path) - 1);
  ::unlink(path_.c_str());
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    ::close(listen_fd_);
    throw SimError("control socket: bind failed on " + path_);
  }
  if (::listen(listen_fd_, 4) < 0) {
    ::close(listen_fd_);
    throw SimError("control socket: listen failed");
  }
  thread_ = std::thread([this] { serve(); });
}

ControlSocket::~ControlSocket() {
  stop_ = true;
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
  }
  if (thread_.joinable()) thread_.join();
  ::unlink(path_.c_str());
}

void ControlSocket::serve() {
  while (!stop_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, 200);
    if (stop_) break;
    if (rc <= 0) continue;

    const int conn = ::accept(listen_fd_, nullptr, nullptr);
    if (conn < 0) continue;

    std::string buf;
    char chunk[256];
    while (!stop_) {
      const ssize_t n = ::read(conn, chunk, sizeof(chunk));
      if (n <= 0) break;
      buf.append(chunk, static_cast<size_t>(n));
      size_t nl;
      while ((nl = buf.find('\n')) != std::string::npos) {
        const std::string line = buf.substr(0, nl);
        buf.erase(0, nl + 1);
        ControlCommand cmd;
        if (parse_control_command(line, cmd)) {
          kernel_.push_control(cmd);
          const char* ok = "ok\n";
          (void)::write(conn, ok, 3);
        } else {
          const char* err = "err: expected pause|resume|step N|quit\n";
          (void)::write(conn, err, std::strlen(err));
        }
      }
    }
    ::close(conn);
  }
}

}  // namespace sky::sim
