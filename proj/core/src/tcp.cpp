#include "patriot/tcp.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "patriot/errors.hpp"

namespace patriot {

namespace {

sockaddr_in make_addr(const std::string& host, int port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    std::string h = host.empty() ? "127.0.0.1" : host;
    if (::inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) {
        throw ProvisionError("tcp: bad address '" + h + "'");
    }
    return addr;
}

} // namespace

TcpLineServer::TcpLineServer(const std::string& host, int port) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw ProvisionError("tcp: socket() failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr = make_addr(host, port);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw ProvisionError("tcp: bind to port " + std::to_string(port) + " failed: " +
                             std::strerror(errno));
    }
    if (::listen(listen_fd_, 8) != 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw ProvisionError("tcp: listen failed");
    }
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    bound_port_ = ntohs(bound.sin_port);
    accept_thread_ = std::thread([this] { accept_loop(); });
}

TcpLineServer::~TcpLineServer() {
    stopping_ = true;
    if (listen_fd_ >= 0) {
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    {
        std::lock_guard<std::mutex> lock(mu_);
        for (int fd : client_fds_) {
            ::shutdown(fd, SHUT_RDWR);
            ::close(fd);
        }
        client_fds_.clear();
    }
    for (auto& t : readers_) {
        if (t.joinable()) t.join();
    }
}

void TcpLineServer::accept_loop() {
    while (!stopping_) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) break;
        std::lock_guard<std::mutex> lock(mu_);
        client_fds_.push_back(fd);
        readers_.emplace_back([this, fd] { reader_loop(fd); });
    }
}

void TcpLineServer::reader_loop(int fd) {
    std::string buf;
    char chunk[1024];
    while (!stopping_) {
        ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n <= 0) break;
        buf.append(chunk, static_cast<std::size_t>(n));
        std::size_t pos;
        while ((pos = buf.find('\n')) != std::string::npos) {
            std::lock_guard<std::mutex> lock(mu_);
            frames_.push_back(buf.substr(0, pos));
            buf.erase(0, pos + 1);
        }
    }
}

std::vector<std::string> TcpLineServer::drain() {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<std::string> out;
    out.swap(frames_);
    return out;
}

TcpLineClient::TcpLineClient(const std::string& host, int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw ProvisionError("tcp: socket() failed");
    sockaddr_in addr = make_addr(host, port);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw ProvisionError("tcp: connect to " + host + ":" + std::to_string(port) +
                             " failed: " + std::strerror(errno));
    }
}

TcpLineClient::~TcpLineClient() {
    if (fd_ >= 0) ::close(fd_);
}

void TcpLineClient::send_line(const std::string& line) {
    const char* p = line.data();
    std::size_t left = line.size();
    while (left > 0) {
        ssize_t n = ::send(fd_, p, left, MSG_NOSIGNAL);
        if (n <= 0) return; // peer gone; external side is best-effort
        p += n;
        left -= static_cast<std::size_t>(n);
    }
}

} // namespace patriot
