#include <doctest.h>

#include "cbpir/wire.hpp"

#include <cstdlib>
#include <thread>

using namespace cbpir;

namespace {

SchemeParams desk() {
    SchemeParams p;
    p.b = 1;
    p.s = 4;
    p.v = 2;
    p.n = 6;
    p.k = 3;
    p.m = 8;
    p.L = 4;
    p.f = 1;
    return p;
}

struct EnvGuard {
    std::string name;
    EnvGuard(const char* n, const char* value) : name(n) { ::setenv(n, value, 1); }
    ~EnvGuard() { ::unsetenv(name.c_str()); }
};

} // namespace

TEST_CASE("frame codec round trip and sizes") {
    Frame err{MsgType::error, {}};
    const Bytes wire = encode_frame(err);
    REQUIRE(wire.size() == 5);
    CHECK(wire[0] == 0);
    CHECK(wire[1] == 0);
    CHECK(wire[2] == 0);
    CHECK(wire[3] == 1); // length covers only the type byte
    CHECK(wire[4] == 0x04);
    CHECK(decode_frame(wire) == err);

    const SchemeParams p = desk();
    Rng rng(31u);
    std::vector<Fq> w(p.m, 1u);
    Frame qf{MsgType::query, query_to_bytes(p, gen_query(p, w, rng).query)};
    CHECK(decode_frame(encode_frame(qf)) == qf);
}

TEST_CASE("frame codec rejects malformed input") {
    Frame ok{MsgType::params, {0xAA, 0xBB}};
    Bytes wire = encode_frame(ok);

    Bytes truncated(wire.begin(), wire.end() - 1);
    CHECK_THROWS_AS(decode_frame(truncated), WireError);
    Bytes trailing = wire;
    trailing.push_back(0);
    CHECK_THROWS_AS(decode_frame(trailing), WireError);
    Bytes header_only(wire.begin(), wire.begin() + 3);
    CHECK_THROWS_AS(decode_frame(header_only), WireError);

    Bytes bad_type = wire;
    bad_type[4] = 0x07;
    CHECK_THROWS_AS(decode_frame(bad_type), WireError);
    Bytes zero_len = {0, 0, 0, 0};
    CHECK_THROWS_AS(decode_frame(zero_len), WireError);

    CHECK_THROWS_AS(decode_frame(wire, 2), WireError); // explicit cap
}

TEST_CASE("frame size cap from the environment") {
    CHECK(max_frame_bytes() == (1ull << 30));
    {
        EnvGuard g("CBPIR_MAX_FRAME", "1000");
        CHECK(max_frame_bytes() == 1000);
    }
    {
        EnvGuard g("CBPIR_MAX_FRAME", "nonsense");
        CHECK(max_frame_bytes() == (1ull << 30));
    }
    CHECK(max_frame_bytes() == (1ull << 30));
}

TEST_CASE("endpoint parsing") {
    const Endpoint ep = parse_endpoint("127.0.0.1:8080");
    CHECK(ep.host == "127.0.0.1");
    CHECK(ep.port == 8080);
    CHECK(parse_endpoint("localhost:0").port == 0);
    CHECK_THROWS_AS(parse_endpoint("nocolon"), WireError);
    CHECK_THROWS_AS(parse_endpoint(":80"), WireError);
    CHECK_THROWS_AS(parse_endpoint("host:"), WireError);
    CHECK_THROWS_AS(parse_endpoint("host:99999"), WireError);
    CHECK_THROWS_AS(parse_endpoint("host:12x"), WireError);

    CHECK(endpoint_from_env() == "127.0.0.1:0");
    EnvGuard g("CBPIR_ADDR", "10.0.0.1:99");
    CHECK(endpoint_from_env() == "10.0.0.1:99");
}

TEST_CASE("loopback query round trip and error codes") {
    const SchemeParams p = desk();
    Rng rng(77u);
    const Database db = Database::random(p, rng);
    WireServer server(Endpoint{}, std::make_pair(p, db));
    REQUIRE(server.port() != 0);

    WireClient client(Endpoint{"127.0.0.1", server.port()});
    CHECK(client.fetch_params() == p);

    std::vector<Fq> w(p.m, 1u);
    const QueryBundle bundle = gen_query(p, w, rng);
    const ResponseMatrix remote = client.query(p, bundle.query);
    const ResponseMatrix local = server_respond(p, db, bundle.query);
    CHECK(remote == local);

    SchemeParams other = p;
    other.m = 9;
    Rng rng2(78u);
    const QueryBundle bundle2 = gen_query(other, std::vector<Fq>(other.m, 1u), rng2);
    CHECK_THROWS_WITH_AS(client.query(other, bundle2.query),
                         "server error: param-mismatch", WireError);

    CHECK_THROWS_WITH_AS(client.upload_db(p, db), "server error: db-already-loaded", WireError);

    server.stop();
}

TEST_CASE("empty server accepts one upload") {
    const SchemeParams p = desk();
    Rng rng(99u);
    const Database db = Database::random(p, rng);
    WireServer server(Endpoint{});

    WireClient client(Endpoint{"127.0.0.1", server.port()});
    std::vector<Fq> w(p.m, 1u);
    const QueryBundle bundle = gen_query(p, w, rng);
    CHECK_THROWS_WITH_AS(client.query(p, bundle.query), "server error: no-database", WireError);
    CHECK_THROWS_WITH_AS(client.fetch_params(), "server error: no-database", WireError);

    client.upload_db(p, db);
    CHECK(client.fetch_params() == p);
    CHECK(client.query(p, bundle.query) == server_respond(p, db, bundle.query));
}

TEST_CASE("server enforces the frame cap") {
    const SchemeParams p = desk();
    Rng rng(5u);
    const Database db = Database::random(p, rng);
    EnvGuard g("CBPIR_MAX_FRAME", "32");
    WireServer server(Endpoint{});
    WireClient client(Endpoint{"127.0.0.1", server.port()});
    CHECK_THROWS_WITH_AS(client.upload_db(p, db), "server error: frame-too-large", WireError);
}

TEST_CASE("socket retrieval is byte-identical to the in-process path") {
    const SchemeParams p = desk();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Rng db_rng(mix_seed(seed, 0));
        const Database db = Database::random(p, db_rng);
        const std::vector<int> j_set = {static_cast<int>(seed) % p.m};

        Rng local_rng(mix_seed(seed, 1));
        const BatchResult local = retrieve_batch(p, j_set, local_rng, [&](const QueryMatrix& q) {
            return server_respond(p, db, q);
        });

        WireServer server(Endpoint{}, std::make_pair(p, db));
        WireClient client(Endpoint{"127.0.0.1", server.port()});
        Rng remote_rng(mix_seed(seed, 1));
        const BatchResult remote =
            retrieve_batch(p, j_set, remote_rng,
                           [&](const QueryMatrix& q) { return client.query(p, q); });

        REQUIRE(local.files.size() == remote.files.size());
        for (std::size_t i = 0; i < local.files.size(); ++i) {
            CHECK(local.files[i] == remote.files[i]);
            CHECK(local.files[i] == db.file(p, j_set[i]));
        }
    }
}

TEST_CASE("concurrent identical queries give identical responses") {
    const SchemeParams p = desk();
    Rng rng(123u);
    const Database db = Database::random(p, rng);
    WireServer server(Endpoint{}, std::make_pair(p, db));

    std::vector<Fq> w(p.m, 1u);
    const QueryBundle bundle = gen_query(p, w, rng);
    const ResponseMatrix expect = server_respond(p, db, bundle.query);

    std::vector<std::thread> threads;
    std::vector<int> good(4, 0);
    for (int t = 0; t < 4; ++t)
        threads.emplace_back([&, t] {
            WireClient client(Endpoint{"127.0.0.1", server.port()});
            for (int round = 0; round < 3; ++round)
                if (client.query(p, bundle.query) == expect)
                    ++good[t];
        });
    for (auto& t : threads)
        t.join();
    for (int t = 0; t < 4; ++t)
        CHECK(good[t] == 3);
}
