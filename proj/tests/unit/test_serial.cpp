#include <doctest.h>

#include "cbpir/rng.hpp"
#include "cbpir/serial.hpp"

using namespace cbpir;

TEST_CASE("integer writers round-trip through ByteReader") {
    Bytes buf;
    put_u16le(buf, 0xBEEF);
    put_u32le(buf, 0xDEADBEEFu);
    put_u64le(buf, 0x0123456789ABCDEFull);
    put_u32be(buf, 0xCAFEBABEu);
    CHECK(buf.size() == 18);
    CHECK(buf[0] == 0xEF); // little-endian
    CHECK(buf[14] == 0xCA); // big-endian
    ByteReader rd(buf);
    CHECK(rd.u16le() == 0xBEEF);
    CHECK(rd.u32le() == 0xDEADBEEFu);
    CHECK(rd.u64le() == 0x0123456789ABCDEFull);
    CHECK(rd.u32be() == 0xCAFEBABEu);
    CHECK(rd.remaining() == 0);
    CHECK_THROWS_AS(rd.u8(), SerialError);
}

TEST_CASE("bit packing round-trips for every width") {
    Rng rng(123u);
    for (int nbits = 1; nbits <= 17; ++nbits) {
        std::vector<std::uint32_t> vals(97);
        for (auto& v : vals)
            v = rng.below(1u << nbits);
        Bytes buf;
        BitWriter bw(buf);
        for (auto v : vals)
            bw.put(v, nbits);
        CHECK(buf.size() == (vals.size() * static_cast<std::size_t>(nbits) + 7) / 8);
        BitReader br(buf);
        for (auto v : vals)
            CHECK(br.get(nbits) == v);
    }
}

TEST_CASE("bit order is LSB-first within a byte") {
    Bytes buf;
    BitWriter bw(buf);
    bw.put(0b1u, 1);  // bit 0
    bw.put(0b10u, 2); // bits 1..2
    bw.put(0b0111u, 4);
    REQUIRE(buf.size() == 1);
    CHECK(buf[0] == 0b00111101u);
}

TEST_CASE("BitReader throws on truncation, aligns correctly") {
    Bytes buf = {0xFF};
    BitReader br(buf);
    CHECK(br.get(5) == 0x1F);
    br.align_byte();
    CHECK(br.bytes_consumed() == 1);
    CHECK_THROWS_AS(br.get(1), SerialError);
}

TEST_CASE("rng is deterministic and rejection sampling stays in range") {
    Rng a(9u), b(9u);
    for (int i = 0; i < 100; ++i)
        CHECK(a.u64() == b.u64());
    Rng r(10u);
    for (int i = 0; i < 1000; ++i) {
        CHECK(r.below(7) < 7);
        const auto nz = r.below_nonzero(5);
        CHECK(nz >= 1);
        CHECK(nz < 5);
    }
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 0) != mix_seed(2, 0));
    CHECK(mix_seed(1, 2) == mix_seed(1, 2));
}
