#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <cstring>
#include <thread>

#include "deepblur/remote.hpp"
#include "deepblur/threat.hpp"

using namespace deepblur;

namespace {

BlobGeneratorConfig small_cfg() {
    BlobGeneratorConfig cfg;
    cfg.blobs = 6;
    cfg.size = 16;
    return cfg;
}

SurrogateClassifier trained_model(const LabeledDataset& ds) {
    const Split sp = split_dataset(ds, SplitSpec{3, 1, 1, 11});
    TrainConfig cfg;
    cfg.epochs = 60;
    return train_classifier(sp.train, sp.val, ExtractorSpec{ExtractorKind::randconv, 0, 2}, cfg);
}

// the byte-exact image a PNG round-trip produces, as the server will see it
ImageTensor quantized(const ImageTensor& img) {
    const auto png = encode_png(img);
    return decode_png(png.data(), png.size());
}

}  // namespace

TEST_CASE("base64 round-trips and rejects junk") {
    const std::vector<unsigned char> data = {0x00, 0x01, 0xfe, 0xff, 0x10, 0x20, 0x30};
    for (std::size_t n = 0; n <= data.size(); ++n) {
        const std::string text = base64_encode(data.data(), n);
        const std::vector<unsigned char> back = base64_decode(text);
        CHECK(back == std::vector<unsigned char>(data.begin(), data.begin() + n));
    }
    CHECK(base64_encode(reinterpret_cast<const unsigned char*>("foob"), 4) == "Zm9vYg==");
    CHECK_THROWS_AS(base64_decode("abc"), std::invalid_argument);
    CHECK_THROWS_AS(base64_decode("a!=="), std::invalid_argument);
}

TEST_CASE("enroll-train-identify round trip on loopback") {
    MockService service(ExtractorSpec{ExtractorKind::randconv, 0, 2}, TrainConfig{60, 0.5, 0.9, 8, 13});
    const LabeledDataset ds = make_identity_dataset(2, 4, 0.05, 31, small_cfg());

    RemoteClient client({"127.0.0.1", service.port(), 5000});
    for (int i = 0; i < static_cast<int>(ds.items.size()); ++i)
        client.enroll(ds.items[i].label, ds.items[i].image);
    client.train();
    const auto [label, confidence] = client.identify(ds.items[0].image);
    CHECK((label == 0 || label == 1));
    CHECK(confidence >= 0.0);
    CHECK(confidence <= 1.0);
}

TEST_CASE("single-identity service answers that identity with confidence 1") {
    MockService service(ExtractorSpec{ExtractorKind::pixel}, TrainConfig{});
    const LabeledDataset ds = make_identity_dataset(2, 3, 0.05, 37, small_cfg());

    RemoteClient client({"127.0.0.1", service.port(), 5000});
    client.enroll(42, ds.items[0].image);
    client.enroll(42, ds.items[1].image);
    client.train();
    const auto [label, confidence] = client.identify(ds.items[5].image);
    CHECK(label == 42);
    CHECK(confidence == 1.0);
}

TEST_CASE("identify before train is a service error") {
    MockService service(ExtractorSpec{ExtractorKind::pixel}, TrainConfig{});
    const LabeledDataset ds = make_identity_dataset(2, 3, 0.05, 41, small_cfg());
    RemoteClient client({"127.0.0.1", service.port(), 5000});
    CHECK_THROWS_AS(client.identify(ds.items[0].image), RemoteServiceError);
}

TEST_CASE("remote answers equal local evaluation bit for bit") {
    const LabeledDataset ds = make_identity_dataset(4, 5, 0.05, 43, small_cfg());
    const SurrogateClassifier model = trained_model(ds);
    MockService service(model);
    RemoteClient client({"127.0.0.1", service.port(), 5000});

    for (const auto& item : ds.items) {
        const auto [remote_label, remote_conf] = client.identify(item.image);
        const ImageTensor local_view = quantized(item.image);
        const std::vector<double> p = model.predict_proba(local_view);
        int best = 0;
        for (int k = 1; k < static_cast<int>(p.size()); ++k)
            if (p[k] > p[best]) best = k;
        CHECK(remote_label == best);
        CHECK(std::bit_cast<std::uint64_t>(remote_conf) ==
              std::bit_cast<std::uint64_t>(p[best]));
    }
}

TEST_CASE("unreachable endpoint raises a transport error without retry") {
    RemoteClient client({"127.0.0.1", 1, 300});  // port 1: nothing listens there
    const ImageTensor img(8, 8, 1, 0.5);
    CHECK_THROWS_AS(client.identify(img), TransportError);
}

TEST_CASE("malformed responses raise protocol errors") {
    // one-shot raw TCP server that answers garbage
    int port = 0;
    std::thread junk_server;
    {
        const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        REQUIRE(fd >= 0);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = 0;
        REQUIRE(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
        socklen_t alen = sizeof addr;
        ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &alen);
        port = ntohs(addr.sin_port);
        REQUIRE(::listen(fd, 1) == 0);
        junk_server = std::thread([fd] {
            const int c = ::accept(fd, nullptr, nullptr);
            if (c >= 0) {
                char buf[4096];
                (void)::recv(c, buf, sizeof buf, 0);
                const char* junk = "this is not json\n";
                (void)::send(c, junk, std::strlen(junk), 0);
                ::close(c);
            }
            ::close(fd);
        });
    }
    RemoteClient client({"127.0.0.1", port, 2000});
    const ImageTensor img(8, 8, 1, 0.5);
    CHECK_THROWS_AS(client.identify(img), ProtocolError);
    junk_server.join();
}

TEST_CASE("concurrent identify requests are consistent") {
    const LabeledDataset ds = make_identity_dataset(3, 5, 0.05, 47, small_cfg());
    const SurrogateClassifier model = trained_model(ds);
    MockService service(model);

    const ImageTensor& probe = ds.items[0].image;
    std::vector<std::pair<int, double>> answers(8);
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i)
        threads.emplace_back([&, i] {
            RemoteClient client({"127.0.0.1", service.port(), 5000});
            answers[i] = client.identify(probe);
        });
    for (auto& t : threads) t.join();
    for (int i = 1; i < 8; ++i) {
        CHECK(answers[i].first == answers[0].first);
        CHECK(answers[i].second == answers[0].second);
    }
}

TEST_CASE("shutdown releases the port for rebinding") {
    int port = 0;
    {
        MockService service(ExtractorSpec{ExtractorKind::pixel}, TrainConfig{});
        port = service.port();
        service.shutdown();
        // rebinding the same port must now succeed
        MockService second(ExtractorSpec{ExtractorKind::pixel}, TrainConfig{}, port);
        CHECK(second.port() == port);
    }
}
