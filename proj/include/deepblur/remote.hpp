#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "deepblur/classifier.hpp"
#include "deepblur/image.hpp"

namespace deepblur {

// Socket-level failures: refused connection, timeout, broken stream.
struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The service answered {"ok":false,...}; message carries the server's error.
struct RemoteServiceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The response could not be parsed or misses required fields.
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string base64_encode(const unsigned char* data, std::size_t len);
std::vector<unsigned char> base64_decode(const std::string& text);

// Line-delimited JSON over TCP on 127.0.0.1. Requests:
//   {"op":"enroll","id":<int>,"image_b64":<base64 PNG>} -> {"ok":true}
//   {"op":"train"}                                      -> {"ok":true}
//   {"op":"identify","image_b64":<base64 PNG>}          -> {"ok":true,"id":...,"confidence":...}
// Failures answer {"ok":false,"error":<string>}.
class MockService {
public:
    // Serves a pre-trained model; identify works immediately.
    explicit MockService(SurrogateClassifier model, int port = 0);
    // Starts empty; clients enroll images and trigger train.
    MockService(ExtractorSpec features, TrainConfig train_cfg, int port = 0);
    ~MockService();

    MockService(const MockService&) = delete;
    MockService& operator=(const MockService&) = delete;

    int port() const;
    void shutdown();  // idempotent; releases the port

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct RemoteClientConfig {
    std::string host = "127.0.0.1";
    int port = 0;
    int timeout_ms = 5000;
};

// One persistent connection, no retries; errors are TransportError,
// RemoteServiceError or ProtocolError depending on the failure layer.
class RemoteClient {
public:
    explicit RemoteClient(RemoteClientConfig cfg);
    ~RemoteClient();

    RemoteClient(const RemoteClient&) = delete;
    RemoteClient& operator=(const RemoteClient&) = delete;

    void enroll(int id, const ImageTensor& img);
    void train();
    std::pair<int, double> identify(const ImageTensor& img);

private:
    std::string request_line(const std::string& line);

    RemoteClientConfig cfg_;
    int fd_ = -1;
    std::string rx_buffer_;
};

}  // namespace deepblur
