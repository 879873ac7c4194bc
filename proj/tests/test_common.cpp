#include <gtest/gtest.h>

#include "biot/codec.hpp"
#include "biot/common.hpp"
#include "support.hpp"

using namespace biot;

TEST(common, hex_round_trip) {
    test::Gen gen(7);
    for (int i = 0; i < 200; ++i) {
        const Bytes b = gen.bytes(gen.range(0, 64));
        EXPECT_EQ(from_hex(to_hex(b)), b);
        EXPECT_EQ(from_hex("0x" + to_hex(b)), b);
    }
    EXPECT_EQ(to_hex(Bytes{0xab, 0x01}), "ab01");
    EXPECT_EQ(from_hex("AB01"), (Bytes{0xab, 0x01}));
}

TEST(common, hex_rejects_garbage) {
    EXPECT_THROW(from_hex("abc"), Error);
    EXPECT_THROW(from_hex("zz"), Error);
}

// FIPS 180-2 test vector.
TEST(common, sha256_known_answer) {
    EXPECT_EQ(to_hex(as_view(sha256(to_bytes("abc")))),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(common, sha256_parts_equal_concatenation) {
    test::Gen gen(8);
    for (int i = 0; i < 50; ++i) {
        const Bytes a = gen.bytes(gen.range(0, 40));
        const Bytes b = gen.bytes(gen.range(0, 40));
        Bytes ab = a;
        ab.insert(ab.end(), b.begin(), b.end());
        EXPECT_EQ(sha256({ByteView(a), ByteView(b)}), sha256(ab));
        EXPECT_EQ(sha256(ab), test::oracle_sha256(ab));
    }
}

TEST(common, address_text_form) {
    const auto a = Address::from_hex("0x00112233445566778899AABBCCDDEEFF00112233");
    EXPECT_EQ(a.to_hex(), "0x00112233445566778899aabbccddeeff00112233");
    EXPECT_EQ(Address::from_hex(a.to_hex()), a);
    EXPECT_EQ(a.bytes().size(), 20u);
}

TEST(common, ids_have_fixed_width) {
    EXPECT_THROW(Address::from_bytes(Bytes(19)), Error);
    EXPECT_THROW(Address::from_bytes(Bytes(21)), Error);
    EXPECT_THROW(DeviceId::from_bytes(Bytes(15)), Error);
    EXPECT_NO_THROW(DeviceId::from_bytes(Bytes(16)));
}

TEST(common, labels_are_deterministic) {
    EXPECT_EQ(Address::from_label("x"), Address::from_label("x"));
    EXPECT_NE(Address::from_label("x"), Address::from_label("y"));
    const auto d = sha256(to_bytes("dev"));
    EXPECT_TRUE(std::equal(d.begin(), d.begin() + 16, DeviceId::from_label("dev").bytes().begin()));
}

TEST(common, storage_scheme_names) {
    for (auto s : {StorageScheme::FullOnChain, StorageScheme::DataHashing, StorageScheme::MerkleTree}) {
        EXPECT_EQ(parse_storage_scheme(to_string(s)), s);
    }
    try {
        parse_storage_scheme("Blockchain");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid);
    }
}

TEST(codec, round_trip) {
    codec::Writer w;
    w.u8(1).u16(0x0203).u32(0x04050607).u64(0x08090a0b0c0d0e0fULL).i64(-5).blob(Bytes{9, 9}).str("hi");
    const Bytes out = w.take();
    EXPECT_EQ(out[1], 0x02);  // big-endian
    codec::Reader r(out);
    EXPECT_EQ(r.u8(), 1);
    EXPECT_EQ(r.u16(), 0x0203);
    EXPECT_EQ(r.u32(), 0x04050607u);
    EXPECT_EQ(r.u64(), 0x08090a0b0c0d0e0fULL);
    EXPECT_EQ(r.i64(), -5);
    EXPECT_EQ(r.blob(), (Bytes{9, 9}));
    EXPECT_EQ(r.str(), "hi");
    EXPECT_TRUE(r.done());
    EXPECT_NO_THROW(r.expect_done());
}

TEST(codec, truncation_is_malformed) {
    codec::Writer w;
    w.blob(Bytes(10, 1));
    Bytes out = w.take();
    test::Gen gen(3);
    for (std::size_t cut = 0; cut < out.size(); ++cut) {
        codec::Reader r(ByteView(out).first(cut));
        try {
            (void)r.blob();
            FAIL() << "cut " << cut;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::MalformedEncoding);
        }
    }
}
