#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <netinet/in.h>

namespace texsense {

/// IPv4 endpoint; host may be a name or dotted quad.
struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
  /// Parses "host:port". Throws ArgumentError.
  static Endpoint parse(const std::string& text);
};

/// Owning POSIX UDP socket. Failures throw NetworkError naming the endpoint.
class UdpSocket {
 public:
  /// Unbound socket for sending.
  static UdpSocket open();
  /// Socket bound to `local`; port 0 picks an ephemeral port.
  static UdpSocket bind(const Endpoint& local);

  UdpSocket(UdpSocket&& other) noexcept;
  UdpSocket& operator=(UdpSocket&& other) noexcept;
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;
  ~UdpSocket();

  void send_to(const Endpoint& dest, std::span<const std::uint8_t> datagram);
  /// Waits up to timeout_s for one datagram. Returns its size (truncated to
  /// the span) or nothing on timeout.
  std::optional<std::size_t> receive(std::span<std::uint8_t> out, double timeout_s);

  std::uint16_t local_port() const;
  const std::string& description() const { return desc_; }

 private:
  UdpSocket(int fd, std::string desc) : fd_(fd), desc_(std::move(desc)) {}
  void close() noexcept;

  int fd_ = -1;
  std::string desc_;
  // Last resolved destination, so a paced sender resolves once.
  std::string cached_host_;
  std::uint16_t cached_port_ = 0;
  sockaddr_in cached_addr_{};
};

}  // namespace texsense
