#include "texsense/udp.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "texsense/error.hpp"

namespace texsense {

namespace {

std::string errno_text() { return std::strerror(errno); }

sockaddr_in resolve(const Endpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(ep.host.c_str(), nullptr, &hints, &res);
  if (rc != 0 || res == nullptr)
    throw NetworkError("cannot resolve " + ep.to_string() + ": " + ::gai_strerror(rc));
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof addr);
  ::freeaddrinfo(res);
  addr.sin_port = htons(ep.port);
  return addr;
}

int make_socket(const std::string& what) {
  const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) throw NetworkError("socket() for " + what + " failed: " + errno_text());
  return fd;
}

}  // namespace

Endpoint Endpoint::parse(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw ArgumentError("endpoint must be host:port, got '" + text + "'");
  Endpoint ep;
  ep.host = text.substr(0, colon);
  const std::string port = text.substr(colon + 1);
  char* end = nullptr;
  const long v = std::strtol(port.c_str(), &end, 10);
  if (*end != '\0' || v < 0 || v > 65535) throw ArgumentError("bad port in endpoint '" + text + "'");
  ep.port = static_cast<std::uint16_t>(v);
  return ep;
}

UdpSocket UdpSocket::open() { return UdpSocket(make_socket("sender"), "sender"); }

UdpSocket UdpSocket::bind(const Endpoint& local) {
  const int fd = make_socket(local.to_string());
  UdpSocket sock(fd, local.to_string());
  // Room for a few seconds of audio if the consumer stalls.
  int rcvbuf = 4 << 20;
  ::setsockopt(fd, SOL_SOCKET, SO_RCVBUF, &rcvbuf, sizeof rcvbuf);
  const sockaddr_in addr = resolve(local);
  if (::bind(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0)
    throw NetworkError("cannot bind " + local.to_string() + ": " + errno_text());
  sock.desc_ = local.host + ":" + std::to_string(sock.local_port());
  return sock;
}

UdpSocket::UdpSocket(UdpSocket&& other) noexcept
    : fd_(other.fd_),
      desc_(std::move(other.desc_)),
      cached_host_(std::move(other.cached_host_)),
      cached_port_(other.cached_port_),
      cached_addr_(other.cached_addr_) {
  other.fd_ = -1;
}

UdpSocket& UdpSocket::operator=(UdpSocket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    desc_ = std::move(other.desc_);
    cached_host_ = std::move(other.cached_host_);
    cached_port_ = other.cached_port_;
    cached_addr_ = other.cached_addr_;
    other.fd_ = -1;
  }
  return *this;
}

UdpSocket::~UdpSocket() { close(); }

void UdpSocket::close() noexcept {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void UdpSocket::send_to(const Endpoint& dest, std::span<const std::uint8_t> datagram) {
  if (dest.host != cached_host_ || dest.port != cached_port_ || cached_host_.empty()) {
    cached_addr_ = resolve(dest);
    cached_host_ = dest.host;
    cached_port_ = dest.port;
  }
  const ssize_t n = ::sendto(fd_, datagram.data(), datagram.size(), 0,
                             reinterpret_cast<const sockaddr*>(&cached_addr_), sizeof cached_addr_);
  if (n < 0 || static_cast<std::size_t>(n) != datagram.size())
    throw NetworkError("send to " + dest.to_string() + " failed: " + errno_text());
}

std::optional<std::size_t> UdpSocket::receive(std::span<std::uint8_t> out, double timeout_s) {
  pollfd pfd{fd_, POLLIN, 0};
  const int ms = timeout_s <= 0.0 ? 0 : static_cast<int>(std::ceil(timeout_s * 1000.0));
  for (;;) {
    const int rc = ::poll(&pfd, 1, ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw NetworkError("poll on " + desc_ + " failed: " + errno_text());
    }
    if (rc == 0) return std::nullopt;
    break;
  }
  const ssize_t n = ::recv(fd_, out.data(), out.size(), MSG_TRUNC);
  if (n < 0) throw NetworkError("receive on " + desc_ + " failed: " + errno_text());
  return std::min(static_cast<std::size_t>(n), out.size());
}

std::uint16_t UdpSocket::local_port() const {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0)
    throw NetworkError("getsockname on " + desc_ + " failed: " + errno_text());
  return ntohs(addr.sin_port);
}

}  // namespace texsense
