#ifndef PATRIOT_TCP_HPP
#define PATRIOT_TCP_HPP

#include <atomic>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace patriot {

/// Newline-delimited UTF-8 framing over TCP. Accepts any number of
/// connections; received lines queue until drained on the sim loop.
class TcpLineServer {
public:
    /// Binds and listens immediately; throws ProvisionError on failure.
    /// port 0 picks an ephemeral port (see bound_port()).
    TcpLineServer(const std::string& host, int port);
    ~TcpLineServer();

    int bound_port() const { return bound_port_; }

    /// Take all frames received so far, in arrival order.
    std::vector<std::string> drain();

private:
    void accept_loop();
    void reader_loop(int fd);

    int listen_fd_ = -1;
    int bound_port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    std::mutex mu_;
    std::vector<std::string> frames_;
    std::vector<std::thread> readers_;
    std::vector<int> client_fds_;
};

/// Outbound newline-framed connection for external-tcp connectors.
class TcpLineClient {
public:
    /// Connects immediately; throws ProvisionError on failure.
    TcpLineClient(const std::string& host, int port);
    ~TcpLineClient();

    void send_line(const std::string& line_with_newline);

private:
    int fd_ = -1;
};

} // namespace patriot

#endif
