#include "deepblur/remote.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstring>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

namespace deepblur {

namespace {

constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

}  // namespace

std::string base64_encode(const unsigned char* data, std::size_t len) {
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (std::size_t i = 0; i < len; i += 3) {
        const unsigned b0 = data[i];
        const unsigned b1 = (i + 1 < len) ? data[i + 1] : 0;
        const unsigned b2 = (i + 2 < len) ? data[i + 2] : 0;
        out += kB64Alphabet[b0 >> 2];
        out += kB64Alphabet[((b0 & 0x3) << 4) | (b1 >> 4)];
        out += (i + 1 < len) ? kB64Alphabet[((b1 & 0xF) << 2) | (b2 >> 6)] : '=';
        out += (i + 2 < len) ? kB64Alphabet[b2 & 0x3F] : '=';
    }
    return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
    if (text.size() % 4 != 0) throw std::invalid_argument("base64: length not a multiple of 4");
    std::vector<unsigned char> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int v[4];
        int pad = 0;
        for (int j = 0; j < 4; ++j) {
            const char c = text[i + j];
            if (c == '=' && i + 4 == text.size() && j >= 2) {
                v[j] = 0;
                ++pad;
            } else {
                v[j] = b64_value(c);
                if (v[j] < 0 || pad > 0) throw std::invalid_argument("base64: invalid character");
            }
        }
        out.push_back(static_cast<unsigned char>((v[0] << 2) | (v[1] >> 4)));
        if (pad < 2) out.push_back(static_cast<unsigned char>(((v[1] & 0xF) << 4) | (v[2] >> 2)));
        if (pad < 1) out.push_back(static_cast<unsigned char>(((v[2] & 0x3) << 6) | v[3]));
    }
    return out;
}

using nlohmann::json;

struct MockService::Impl {
    int listen_fd = -1;
    int bound_port = 0;
    std::thread accept_thread;
    std::atomic<bool> stopping{false};

    std::mutex mu;
    std::vector<std::thread> workers;
    std::vector<int> client_fds;

    // model_ is replaced atomically on train; readers take a shared snapshot
    std::shared_ptr<const SurrogateClassifier> model;
    std::vector<int> label_map;  // class index -> enrolled id

    bool enrollment_mode = false;
    ExtractorSpec enroll_features;
    TrainConfig enroll_train_cfg;
    std::multimap<int, ImageTensor> enrolled;

    void start(int port) {
        listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (listen_fd < 0) throw TransportError("mock service: socket() failed");
        const int one = 1;
        ::setsockopt(listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = htons(static_cast<uint16_t>(port));
        if (::bind(listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
            ::close(listen_fd);
            listen_fd = -1;
            throw TransportError("mock service: bind failed on port " + std::to_string(port));
        }
        socklen_t alen = sizeof addr;
        ::getsockname(listen_fd, reinterpret_cast<sockaddr*>(&addr), &alen);
        bound_port = ntohs(addr.sin_port);
        if (::listen(listen_fd, 16) < 0) {
            ::close(listen_fd);
            listen_fd = -1;
            throw TransportError("mock service: listen failed");
        }
        accept_thread = std::thread([this] { accept_loop(); });
    }

    void accept_loop() {
        for (;;) {
            const int fd = ::accept(listen_fd, nullptr, nullptr);
            if (fd < 0) {
                if (stopping) return;
                continue;
            }
            std::lock_guard<std::mutex> lock(mu);
            if (stopping) {
                ::close(fd);
                return;
            }
            client_fds.push_back(fd);
            workers.emplace_back([this, fd] { serve_connection(fd); });
        }
    }

    void serve_connection(int fd) {
        std::string buf;
        char chunk[4096];
        for (;;) {
            const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
            if (n <= 0) break;
            buf.append(chunk, static_cast<std::size_t>(n));
            std::size_t pos;
            while ((pos = buf.find('\n')) != std::string::npos) {
                const std::string line = buf.substr(0, pos);
                buf.erase(0, pos + 1);
                const std::string reply = handle_line(line) + "\n";
                std::size_t sent = 0;
                while (sent < reply.size()) {
                    const ssize_t m = ::send(fd, reply.data() + sent, reply.size() - sent, MSG_NOSIGNAL);
                    if (m <= 0) return;
                    sent += static_cast<std::size_t>(m);
                }
            }
        }
    }

    static std::string fail(const std::string& message) {
        json j;
        j["ok"] = false;
        j["error"] = message;
        return j.dump();
    }

    std::string handle_line(const std::string& line) {
        json req;
        try {
            req = json::parse(line);
        } catch (const json::exception&) {
            return fail("malformed request");
        }
        try {
            const std::string op = req.at("op").get<std::string>();
            if (op == "enroll") return handle_enroll(req);
            if (op == "train") return handle_train();
            if (op == "identify") return handle_identify(req);
            return fail("unknown op: " + op);
        } catch (const json::exception&) {
            return fail("malformed request");
        } catch (const std::exception& e) {
            return fail(e.what());
        }
    }

    std::string handle_enroll(const json& req) {
        if (!enrollment_mode) return fail("service is read-only");
        const int id = req.at("id").get<int>();
        const auto bytes = base64_decode(req.at("image_b64").get<std::string>());
        ImageTensor img = decode_png(bytes.data(), bytes.size());
        {
            std::lock_guard<std::mutex> lock(mu);
            enrolled.emplace(id, std::move(img));
        }
        return json{{"ok", true}}.dump();
    }

    std::string handle_train() {
        if (!enrollment_mode) return fail("service is read-only");
        std::lock_guard<std::mutex> lock(mu);
        if (enrolled.empty()) return fail("nothing enrolled");

        std::vector<int> ids;
        for (const auto& [id, img] : enrolled)
            if (ids.empty() || ids.back() != id) ids.push_back(id);

        if (ids.size() == 1) {
            const ImageTensor& sample = enrolled.begin()->second;
            const int fdim = static_cast<int>(extract(sample, enroll_features).size());
            model = std::make_shared<const SurrogateClassifier>(
                single_class_classifier(enroll_features, fdim));
            label_map = ids;
            return json{{"ok", true}}.dump();
        }

        std::vector<LabeledImage> train_set;
        for (const auto& [id, img] : enrolled) {
            const int cls = static_cast<int>(
                std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
            train_set.push_back({img, cls, -1});
        }
        model = std::make_shared<const SurrogateClassifier>(
            train_classifier(train_set, {}, enroll_features, enroll_train_cfg));
        label_map = ids;
        return json{{"ok", true}}.dump();
    }

    std::string handle_identify(const json& req) {
        std::shared_ptr<const SurrogateClassifier> snapshot;
        std::vector<int> labels;
        {
            std::lock_guard<std::mutex> lock(mu);
            snapshot = model;
            labels = label_map;
        }
        if (!snapshot) return fail("service not trained");
        const auto bytes = base64_decode(req.at("image_b64").get<std::string>());
        const ImageTensor img = decode_png(bytes.data(), bytes.size());
        const std::vector<double> p = snapshot->predict_proba(img);
        int best = 0;
        for (int k = 1; k < static_cast<int>(p.size()); ++k)
            if (p[k] > p[best]) best = k;  // ties keep the lower index
        json j;
        j["ok"] = true;
        j["id"] = labels.empty() ? best : labels[best];
        j["confidence"] = p[best];
        return j.dump();
    }

    void stop() {
        bool expected = false;
        if (!stopping.compare_exchange_strong(expected, true)) return;
        if (listen_fd >= 0) ::shutdown(listen_fd, SHUT_RDWR);
        if (listen_fd >= 0) ::close(listen_fd);
        listen_fd = -1;
        if (accept_thread.joinable()) accept_thread.join();
        std::vector<std::thread> to_join;
        {
            std::lock_guard<std::mutex> lock(mu);
            for (int fd : client_fds) ::shutdown(fd, SHUT_RDWR);
            for (int fd : client_fds) ::close(fd);
            client_fds.clear();
            to_join.swap(workers);
        }
        for (auto& t : to_join)
            if (t.joinable()) t.join();
    }
};

MockService::MockService(SurrogateClassifier model, int port) : impl_(new Impl) {
    if (!model.trained) throw std::invalid_argument("mock service: classifier not trained");
    impl_->model = std::make_shared<const SurrogateClassifier>(std::move(model));
    impl_->label_map.resize(impl_->model->n_classes);
    for (int k = 0; k < impl_->model->n_classes; ++k) impl_->label_map[k] = k;
    impl_->start(port);
}

MockService::MockService(ExtractorSpec features, TrainConfig train_cfg, int port)
    : impl_(new Impl) {
    impl_->enrollment_mode = true;
    impl_->enroll_features = features;
    impl_->enroll_train_cfg = train_cfg;
    impl_->start(port);
}

MockService::~MockService() {
    if (impl_) impl_->stop();
}

int MockService::port() const { return impl_->bound_port; }

void MockService::shutdown() { impl_->stop(); }

namespace {

std::string image_to_b64(const ImageTensor& img) {
    const std::vector<unsigned char> png = encode_png(img);
    return base64_encode(png.data(), png.size());
}

}  // namespace

RemoteClient::RemoteClient(RemoteClientConfig cfg) : cfg_(std::move(cfg)) {}

RemoteClient::~RemoteClient() {
    if (fd_ >= 0) ::close(fd_);
}

std::string RemoteClient::request_line(const std::string& line) {
    if (fd_ < 0) {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd_ < 0) throw TransportError("client: socket() failed");
        timeval tv{};
        tv.tv_sec = cfg_.timeout_ms / 1000;
        tv.tv_usec = (cfg_.timeout_ms % 1000) * 1000;
        ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
        ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(static_cast<uint16_t>(cfg_.port));
        if (::inet_pton(AF_INET, cfg_.host.c_str(), &addr.sin_addr) != 1) {
            ::close(fd_);
            fd_ = -1;
            throw TransportError("client: bad host address " + cfg_.host);
        }
        if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
            ::close(fd_);
            fd_ = -1;
            throw TransportError("client: cannot connect to " + cfg_.host + ":" +
                                 std::to_string(cfg_.port));
        }
    }

    const std::string payload = line + "\n";
    std::size_t sent = 0;
    while (sent < payload.size()) {
        const ssize_t n = ::send(fd_, payload.data() + sent, payload.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) {
            ::close(fd_);
            fd_ = -1;
            throw TransportError("client: send failed");
        }
        sent += static_cast<std::size_t>(n);
    }

    char chunk[4096];
    for (;;) {
        const std::size_t pos = rx_buffer_.find('\n');
        if (pos != std::string::npos) {
            const std::string reply = rx_buffer_.substr(0, pos);
            rx_buffer_.erase(0, pos + 1);
            return reply;
        }
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n <= 0) {
            ::close(fd_);
            fd_ = -1;
            throw TransportError("client: connection closed or timed out");
        }
        rx_buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

namespace {

json parse_reply(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception&) {
        throw ProtocolError("malformed response: " + text);
    }
    if (!j.is_object() || !j.contains("ok") || !j["ok"].is_boolean())
        throw ProtocolError("response missing ok field");
    if (!j["ok"].get<bool>()) {
        const std::string msg =
            j.contains("error") && j["error"].is_string() ? j["error"].get<std::string>() : "unknown";
        throw RemoteServiceError(msg);
    }
    return j;
}

}  // namespace

void RemoteClient::enroll(int id, const ImageTensor& img) {
    json req;
    req["op"] = "enroll";
    req["id"] = id;
    req["image_b64"] = image_to_b64(img);
    parse_reply(request_line(req.dump()));
}

void RemoteClient::train() {
    parse_reply(request_line(json{{"op", "train"}}.dump()));
}

std::pair<int, double> RemoteClient::identify(const ImageTensor& img) {
    json req;
    req["op"] = "identify";
    req["image_b64"] = image_to_b64(img);
    const json j = parse_reply(request_line(req.dump()));
    if (!j.contains("id") || !j.contains("confidence") || !j["id"].is_number_integer() ||
        !j["confidence"].is_number())
        throw ProtocolError("identify response missing fields");
    return {j["id"].get<int>(), j["confidence"].get<double>()};
}

}  // namespace deepblur
