#include "civic/consortium.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>

namespace civic {

const Organization& Consortium::authority() const
{
    const Organization* org = organization(authority_org);
    if (!org)
        throw Error(Errc::InvalidConfig, "authority organization '" + authority_org + "' is not registered");
    return *org;
}

const Organization* Consortium::organization(std::string_view id) const
{
    auto it = organizations.find(std::string(id));
    return it == organizations.end() ? nullptr : &it->second;
}

const Organization* Consortium::organization_by_key(const PublicKey& key) const
{
    for (const auto& [id, org] : organizations)
        if (org.key == key)
            return &org;
    return nullptr;
}

const Organization* Consortium::issuer_for(std::string_view doc_type) const
{
    for (const auto& [id, org] : organizations)
        if (org.doc_types.count(std::string(doc_type)))
            return &org;
    return nullptr;
}

void Consortium::validate() const
{
    if (validators.empty())
        throw Error(Errc::EmptyValidatorSet, "consortium lists no validators");
    (void)authority();
    std::set<PublicKey> keys;
    for (const auto& [id, org] : organizations) {
        if (id != org.id)
            throw Error(Errc::InvalidConfig, "organization key mismatch for " + id);
        if (!keys.insert(org.key).second)
            throw Error(Errc::InvalidConfig, "organizations share a signing key: " + id);
    }
    if (params.block_capacity == 0)
        throw Error(Errc::InvalidConfig, "block_capacity must be positive");
}

namespace {

PublicKey key_from_hex(const std::string& hex)
{
    const Bytes b = from_hex(hex);
    if (b.size() != 32)
        throw Error(Errc::InvalidConfig, "public key must be 32 bytes");
    PublicKey k{};
    std::copy(b.begin(), b.end(), k.begin());
    return k;
}

template<typename T>
T get_or(const YAML::Node& n, const char* key, T fallback)
{
    return n[key] ? n[key].as<T>() : fallback;
}

} // namespace

Consortium load_consortium(const std::filesystem::path& path)
{
    YAML::Node root;
    try {
        root = YAML::LoadFile(path.string());
    } catch (const YAML::Exception& e) {
        throw Error(Errc::InvalidConfig, path.string() + ": " + e.what());
    }
    try {
        Consortium c;
        c.genesis_timestamp = root["genesis_timestamp"].as<std::uint64_t>();
        c.authority_org = root["authority"].as<std::string>();

        std::vector<ValidatorInfo> vs;
        for (const auto& v : root["validators"])
            vs.push_back({v["id"].as<std::string>(), key_from_hex(v["key"].as<std::string>()),
                          get_or<std::string>(v, "organization", "")});
        c.validators = ValidatorSet(std::move(vs), get_or<std::uint64_t>(root, "epoch", 0));

        for (const auto& o : root["organizations"]) {
            Organization org;
            org.id = o["id"].as<std::string>();
            org.name = get_or<std::string>(o, "name", org.id);
            org.key = key_from_hex(o["key"].as<std::string>());
            org.node = get_or<std::string>(o, "node", "");
            org.provider = get_or<bool>(o, "provider", false);
            if (o["doc_types"])
                for (const auto& t : o["doc_types"])
                    org.doc_types.insert(t.as<std::string>());
            c.organizations.emplace(org.id, std::move(org));
        }
        if (root["bootstrap"])
            for (const auto& t : root["bootstrap"])
                c.bootstrap.push_back(Transaction::decode(from_hex(t.as<std::string>())));

        if (const auto p = root["params"]) {
            auto& cp = c.params;
            cp.block_capacity = get_or<std::size_t>(p, "block_capacity", cp.block_capacity);
            cp.block_timer_ms = get_or<std::uint64_t>(p, "block_timer_ms", cp.block_timer_ms);
            cp.round_timeout_ms = get_or<std::uint64_t>(p, "round_timeout_ms", cp.round_timeout_ms);
            cp.future_tolerance_ms = get_or<std::uint64_t>(p, "future_tolerance_ms", cp.future_tolerance_ms);
            cp.mempool_capacity = get_or<std::size_t>(p, "mempool_capacity", cp.mempool_capacity);
            cp.sync_interval_ms = get_or<std::uint64_t>(p, "sync_interval_ms", cp.sync_interval_ms);
            cp.collection_window_ms = get_or<std::uint64_t>(p, "collection_window_ms", cp.collection_window_ms);
            cp.grant_retention_ms = get_or<std::uint64_t>(p, "grant_retention_ms", cp.grant_retention_ms);
        }
        c.validate();
        return c;
    } catch (const YAML::Exception& e) {
        throw Error(Errc::InvalidConfig, path.string() + ": " + e.what());
    }
}

void save_consortium(const Consortium& c, const std::filesystem::path& path)
{
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "genesis_timestamp" << YAML::Value << c.genesis_timestamp;
    out << YAML::Key << "authority" << YAML::Value << c.authority_org;
    out << YAML::Key << "epoch" << YAML::Value << c.validators.epoch();
    out << YAML::Key << "params" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "block_capacity" << YAML::Value << c.params.block_capacity;
    out << YAML::Key << "block_timer_ms" << YAML::Value << c.params.block_timer_ms;
    out << YAML::Key << "round_timeout_ms" << YAML::Value << c.params.round_timeout_ms;
    out << YAML::Key << "future_tolerance_ms" << YAML::Value << c.params.future_tolerance_ms;
    out << YAML::Key << "mempool_capacity" << YAML::Value << c.params.mempool_capacity;
    out << YAML::Key << "sync_interval_ms" << YAML::Value << c.params.sync_interval_ms;
    out << YAML::Key << "collection_window_ms" << YAML::Value << c.params.collection_window_ms;
    out << YAML::Key << "grant_retention_ms" << YAML::Value << c.params.grant_retention_ms;
    out << YAML::EndMap;

    out << YAML::Key << "validators" << YAML::Value << YAML::BeginSeq;
    for (const auto& v : c.validators.validators()) {
        out << YAML::BeginMap;
        out << YAML::Key << "id" << YAML::Value << v.id;
        out << YAML::Key << "key" << YAML::Value << to_hex(v.key);
        out << YAML::Key << "organization" << YAML::Value << v.organization;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "organizations" << YAML::Value << YAML::BeginSeq;
    for (const auto& [id, org] : c.organizations) {
        out << YAML::BeginMap;
        out << YAML::Key << "id" << YAML::Value << org.id;
        out << YAML::Key << "name" << YAML::Value << org.name;
        out << YAML::Key << "key" << YAML::Value << to_hex(org.key);
        out << YAML::Key << "node" << YAML::Value << org.node;
        out << YAML::Key << "provider" << YAML::Value << org.provider;
        out << YAML::Key << "doc_types" << YAML::Value << YAML::Flow << YAML::BeginSeq;
        for (const auto& t : org.doc_types)
            out << t;
        out << YAML::EndSeq;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "bootstrap" << YAML::Value << YAML::BeginSeq;
    for (const auto& tx : c.bootstrap)
        out << to_hex(tx.encode_signed());
    out << YAML::EndSeq;
    out << YAML::EndMap;

    std::ofstream f(path);
    if (!f)
        throw Error(Errc::Io, "cannot write " + path.string());
    f << out.c_str() << '\n';
}

} // namespace civic
