#include <gtest/gtest.h>

#include "biot/contract.hpp"
#include "support.hpp"

using namespace biot;
using namespace biot::contract;

namespace {

struct Fixture {
    Address admin = Address::from_label("c/admin");
    Address g1 = Address::from_label("c/g1");
    Address g2 = Address::from_label("c/g2");
    Address client = Address::from_label("c/client");
    DeviceId d1 = DeviceId::from_label("c/d1");
    DeviceId d2 = DeviceId::from_label("c/d2");
    BiotContract c{admin};

    Fixture() {
        c.register_gateway(ctx(admin), g1);
        c.register_gateway(ctx(admin), g2);
        c.register_device(ctx(admin), d1, g1);
    }
    CallerContext ctx(const Address& a) const { return c.context_for(a); }
};

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(contract, roles_follow_state) {
    Fixture f;
    EXPECT_EQ(f.ctx(f.admin).role, Role::Administrator);
    EXPECT_EQ(f.ctx(f.g1).role, Role::Gateway);
    EXPECT_EQ(f.ctx(f.client).role, Role::Client);
}

TEST(contract, admin_registers_gateway) {
    BiotContract c(Address::from_label("a"));
    c.register_gateway(c.context_for(Address::from_label("a")), Address::from_label("g"));
    EXPECT_EQ(c.state().gateways, (std::set<Address>{Address::from_label("g")}));
}

TEST(contract, non_admin_cannot_register_gateway) {
    Fixture f;
    const auto before = f.c.state().digest();
    EXPECT_EQ(code_of([&] { f.c.register_gateway(f.ctx(f.g1), Address::from_label("c/g9")); }), ErrorCode::Unauthorized);
    EXPECT_EQ(f.c.state().digest(), before);
}

TEST(contract, gateway_registration_is_idempotent) {
    Fixture f;
    const auto before = f.c.state();
    f.c.register_gateway(f.ctx(f.admin), f.g1);
    EXPECT_EQ(f.c.state(), before);
}

TEST(contract, register_device_checks) {
    Fixture f;
    EXPECT_EQ(f.c.state().device_owner.at(f.d1), f.g1);
    EXPECT_EQ(code_of([&] { f.c.register_device(f.ctx(f.client), f.d2, f.g1); }), ErrorCode::Unauthorized);
    EXPECT_EQ(code_of([&] { f.c.register_device(f.ctx(f.admin), f.d2, Address::from_label("c/g9")); }),
              ErrorCode::UnknownGateway);
    EXPECT_FALSE(f.c.state().device_owner.contains(f.d2));
}

TEST(contract, rebinding_overwrites) {
    Fixture f;
    f.c.register_device(f.ctx(f.admin), f.d1, f.g2);
    EXPECT_EQ(f.c.state().device_owner.at(f.d1), f.g2);
    EXPECT_EQ(code_of([&] { f.c.send_response_from_device(f.ctx(f.g1), f.d1, {1}); }), ErrorCode::Unauthorized);
}

TEST(contract, send_message_appends_and_emits) {
    Fixture f;
    const auto e = f.c.send_message_to_device(f.ctx(f.client), f.d1, Bytes(16, 7));
    EXPECT_EQ(e.name, EventName::MessageSentToDevice);
    EXPECT_EQ(e.device, f.d1);
    ASSERT_EQ(f.c.state().outbox.at(f.d1).size(), 1u);
    EXPECT_EQ(f.c.state().outbox.at(f.d1)[0].sequence, 1u);
}

TEST(contract, message_to_unregistered_device_is_discarded) {
    Fixture f;
    const auto before = f.c.state().digest();
    EXPECT_EQ(code_of([&] { f.c.send_message_to_device(f.ctx(f.client), f.d2, {1}); }), ErrorCode::UnknownDevice);
    EXPECT_EQ(f.c.state().digest(), before);
}

TEST(contract, response_only_from_owner) {
    Fixture f;
    f.c.send_response_from_device(f.ctx(f.g1), f.d1, {1, 2});
    EXPECT_EQ(f.c.state().inbox.at(f.d1).size(), 1u);
    const auto before = f.c.state().digest();
    EXPECT_EQ(code_of([&] { f.c.send_response_from_device(f.ctx(f.g2), f.d1, {3}); }), ErrorCode::Unauthorized);
    EXPECT_EQ(code_of([&] { f.c.send_response_from_device(f.ctx(f.admin), f.d1, {3}); }), ErrorCode::Unauthorized);
    EXPECT_EQ(code_of([&] { f.c.send_response_from_device(f.ctx(f.g1), f.d2, {3}); }), ErrorCode::UnknownDevice);
    EXPECT_EQ(f.c.state().digest(), before);
}

TEST(contract, payload_limit) {
    Fixture f;
    EXPECT_EQ(code_of([&] { f.c.send_message_to_device(f.ctx(f.client), f.d1, Bytes(4097)); }),
              ErrorCode::PayloadTooLarge);
    EXPECT_NO_THROW(f.c.send_message_to_device(f.ctx(f.client), f.d1, Bytes(4096)));
}

TEST(contract, cursor_retrieval) {
    Fixture f;
    for (std::uint8_t i = 1; i <= 3; ++i) f.c.send_response_from_device(f.ctx(f.g1), f.d1, {i});
    const auto all = f.c.get_messages_from_device(f.ctx(f.client), f.d1, 0);
    ASSERT_EQ(all.size(), 3u);
    EXPECT_TRUE(f.c.get_messages_from_device(f.ctx(f.client), f.d1, all.back().sequence).empty());
    EXPECT_TRUE(f.c.get_messages_from_device(f.ctx(f.client), f.d1, 99).empty());
    EXPECT_EQ(code_of([&] { (void)f.c.get_messages_from_device(f.ctx(f.client), f.d2, 0); }), ErrorCode::UnknownDevice);
}

TEST(contract, empty_inbox_gives_empty_list) {
    Fixture f;
    EXPECT_TRUE(f.c.get_messages_from_device(f.ctx(f.client), f.d1, 0).empty());
}

TEST(contract, call_encoding_round_trip) {
    test::Gen gen(21);
    for (int i = 0; i < 100; ++i) {
        const auto d = gen.device();
        const auto g = gen.address();
        const Bytes m = gen.bytes(gen.range(0, 100));
        const auto kind = static_cast<PayloadKind>(gen.range(0, 2));
        const auto tag = gen.next();
        const auto e = calls::send_response_from_device(d, m, kind, tag);
        const auto call = decode(e.function, e.args);
        ASSERT_EQ(call.function, Function::SendResponseFromDevice);
        const auto& a = std::get<MessageArgs>(call.args);
        EXPECT_EQ(a.device, d);
        EXPECT_EQ(a.message, m);
        EXPECT_EQ(a.kind, kind);
        EXPECT_EQ(a.tag, tag);
        EXPECT_EQ(encode(call).args, e.args);

        const auto rd = decode(kRegisterDevice, calls::register_device(d, g).args);
        EXPECT_EQ(std::get<RegisterDeviceArgs>(rd.args).gateway, g);
    }
}

TEST(contract, decode_rejects_bad_input) {
    EXPECT_EQ(code_of([] { (void)decode("selfDestruct", {}); }), ErrorCode::UnknownFunction);
    auto e = calls::register_gateway(Address::from_label("x"));
    e.args.pop_back();
    EXPECT_EQ(code_of([&] { (void)decode(e.function, e.args); }), ErrorCode::MalformedEncoding);
    e = calls::deploy();
    e.args.push_back(0);
    EXPECT_EQ(code_of([&] { (void)decode(e.function, e.args); }), ErrorCode::MalformedEncoding);
}

TEST(contract, message_list_encoding_round_trip) {
    const std::vector<Message> ms{{1, PayloadKind::Raw, 0, {1, 2}}, {2, PayloadKind::MerkleRoot, 5, Bytes(32, 9)}};
    EXPECT_EQ(decode_messages(encode_messages(ms)), ms);
    EXPECT_TRUE(decode_messages(encode_messages({})).empty());
}

TEST(contract, dispatch_deploy_rules) {
    std::optional<BiotContract> instance;
    const auto admin = Address::from_label("x/admin");
    EXPECT_EQ(code_of([&] { apply(instance, admin, decode(kRegisterGateway, calls::register_gateway(admin).args), {}); }),
              ErrorCode::ContractNotDeployed);
    apply(instance, admin, {Function::Deploy, DeployArgs{}}, {});
    ASSERT_TRUE(instance);
    EXPECT_EQ(instance->state().admin, admin);
    EXPECT_EQ(code_of([&] { apply(instance, admin, {Function::Deploy, DeployArgs{}}, {}); }),
              ErrorCode::AlreadyDeployed);
    EXPECT_EQ(code_of([&] { (void)query(instance, admin, {Function::Deploy, DeployArgs{}}); }),
              ErrorCode::NotReadOnly);
}

// Random call sequences: every wrongly-authorised mutation is rejected and
// leaves the digest alone; every accepted one changes state as expected.
TEST(contract, access_control_property) {
    test::Gen gen(1234);
    for (int round = 0; round < 50; ++round) {
        const Address admin = gen.address();
        std::vector<Address> gateways{gen.address(), gen.address()};
        std::vector<Address> strangers{gen.address(), gen.address()};
        std::vector<DeviceId> devices{gen.device(), gen.device(), gen.device()};
        BiotContract c(admin);
        std::map<DeviceId, std::size_t> outbox_len, inbox_len;
        std::size_t events_to = 0, events_from = 0;

        for (int step = 0; step < 200; ++step) {
            const auto before = c.state();
            const auto before_digest = before.digest();
            std::vector<Address> callers{admin, gateways[0], gateways[1], strangers[0], strangers[1]};
            const Address caller = callers[gen.range(0, callers.size() - 1)];
            const auto ctx = c.context_for(caller);
            const auto& device = devices[gen.range(0, devices.size() - 1)];
            const auto& gw = gen.coin() ? gateways[gen.range(0, 1)] : strangers[gen.range(0, 1)];
            bool expect_ok = false;
            try {
                switch (gen.range(0, 3)) {
                    case 0:
                        expect_ok = caller == admin;
                        c.register_gateway(ctx, gw);
                        break;
                    case 1:
                        expect_ok = caller == admin && before.gateways.contains(gw);
                        c.register_device(ctx, device, gw);
                        break;
                    case 2:
                        expect_ok = before.device_owner.contains(device);
                        c.send_message_to_device(ctx, device, gen.bytes(8));
                        ++events_to;
                        ++outbox_len[device];
                        break;
                    default:
                        expect_ok = before.device_owner.contains(device) && before.device_owner.at(device) == caller;
                        c.send_response_from_device(ctx, device, gen.bytes(8));
                        ++events_from;
                        ++inbox_len[device];
                        break;
                }
                ASSERT_TRUE(expect_ok) << "accepted a call that should fail";
            } catch (const Error&) {
                ASSERT_FALSE(expect_ok) << "rejected a call that should succeed";
                ASSERT_EQ(c.state().digest(), before_digest);
            }
            for (const auto& [d, owner] : c.state().device_owner) ASSERT_TRUE(c.state().gateways.contains(owner));
        }
        // Event/append bijection and gap-free sequences.
        std::size_t out_total = 0, in_total = 0;
        for (const auto& [d, box] : c.state().outbox) {
            out_total += box.size();
            EXPECT_EQ(box.size(), outbox_len[d]);
            for (std::size_t i = 0; i < box.size(); ++i) EXPECT_EQ(box[i].sequence, i + 1);
        }
        for (const auto& [d, box] : c.state().inbox) {
            in_total += box.size();
            EXPECT_EQ(box.size(), inbox_len[d]);
            for (std::size_t i = 0; i < box.size(); ++i) EXPECT_EQ(box[i].sequence, i + 1);
        }
        EXPECT_EQ(out_total, events_to);
        EXPECT_EQ(in_total, events_from);
    }
}

// Successive reads with an advancing cursor reproduce the inbox exactly once, in order.
TEST(contract, cursor_completeness_property) {
    test::Gen gen(99);
    for (int round = 0; round < 50; ++round) {
        Fixture f;
        std::vector<Bytes> appended, read;
        std::uint64_t cursor = 0;
        for (int step = 0; step < 100; ++step) {
            if (gen.range(0, 2) != 0) {
                appended.push_back(gen.bytes(gen.range(1, 24)));
                f.c.send_response_from_device(f.ctx(f.g1), f.d1, appended.back());
            } else {
                for (const auto& m : f.c.get_messages_from_device(f.ctx(f.client), f.d1, cursor)) {
                    read.push_back(m.payload);
                    cursor = m.sequence;
                }
            }
        }
        for (const auto& m : f.c.get_messages_from_device(f.ctx(f.client), f.d1, cursor)) read.push_back(m.payload);
        EXPECT_EQ(read, appended);
    }
}

TEST(contract, state_digest_tracks_state) {
    Fixture a, b;
    EXPECT_EQ(a.c.state().digest(), b.c.state().digest());
    a.c.send_message_to_device(a.ctx(a.client), a.d1, {1});
    EXPECT_NE(a.c.state().digest(), b.c.state().digest());
    EXPECT_EQ(state_digest(std::nullopt), sha256(Bytes{}));
}
