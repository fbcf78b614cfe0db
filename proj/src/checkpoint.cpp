#include "pathnet/checkpoint.hpp"

#include "pathnet/container.hpp"
#include "pathnet/error.hpp"

namespace pathnet {

namespace {

void append(std::vector<float>& payload, nlohmann::json& sections, const std::string& name, const Linear<float>& p)
{
    sections.push_back({{"name", name + "/weights"}, {"rows", p.in_dim}, {"cols", p.out_dim}});
    sections.push_back({{"name", name + "/bias"}, {"rows", 1}, {"cols", p.out_dim}});
    payload.insert(payload.end(), p.weights.begin(), p.weights.end());
    payload.insert(payload.end(), p.bias.begin(), p.bias.end());
}

void take(std::span<const float> payload, std::size_t& cursor, Linear<float>& p, const std::string& name)
{
    const std::size_t need = p.weights.size() + p.bias.size();
    if (cursor + need > payload.size()) {
        throw DataError("checkpoint payload truncated at section " + name);
    }
    std::copy_n(payload.begin() + static_cast<std::ptrdiff_t>(cursor), p.weights.size(), p.weights.begin());
    cursor += p.weights.size();
    std::copy_n(payload.begin() + static_cast<std::ptrdiff_t>(cursor), p.bias.size(), p.bias.begin());
    cursor += p.bias.size();
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint)
{
    const ModuleBank& bank = checkpoint.bank;
    const HyperParams& hp = bank.hyper_params();
    nlohmann::json header;
    header["format_version"] = kCheckpointFormatVersion;
    header["hyperparams"] = hp;
    header["genotypes"] = nlohmann::json::object();
    for (const auto& [name, g] : checkpoint.genotypes) {
        header["genotypes"][name] = g;
    }
    nlohmann::json frozen = nlohmann::json::array();
    for (int l = 0; l < hp.num_layers; ++l) {
        std::vector<int> row;
        for (int m = 0; m < hp.modules_per_layer; ++m) {
            row.push_back(bank.is_frozen(l, m) ? 1 : 0);
        }
        frozen.push_back(row);
    }
    header["frozen"] = frozen;

    std::vector<float> payload;
    payload.reserve(bank.module_parameter_count());
    nlohmann::json sections = nlohmann::json::array();
    for (int l = 0; l < hp.num_layers; ++l) {
        for (int m = 0; m < hp.modules_per_layer; ++m) {
            append(payload, sections, "module/" + std::to_string(l) + "/" + std::to_string(m), bank.module(l, m));
        }
    }
    nlohmann::json heads = nlohmann::json::array();
    for (const auto& [task, head] : bank.heads()) {
        heads.push_back({{"name", task}, {"classes", head.out_dim}});
        append(payload, sections, "head/" + task, head);
    }
    header["heads"] = heads;
    header["sections"] = sections;
    write_container(path, kCheckpointMagic, header, payload);
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    Container c = read_container(path, kCheckpointMagic);
    const auto& header = c.header;
    try {
        if (header.at("format_version").get<int>() != kCheckpointFormatVersion) {
            throw DataError(path.string() + ": unsupported checkpoint format_version");
        }
        HyperParams hp = header.at("hyperparams").get<HyperParams>();
        hp.validate();
        Checkpoint out{ModuleBank(hp), {}};
        for (const auto& [name, g] : header.at("genotypes").items()) {
            out.genotypes.emplace(name, g.get<Genotype>());
        }
        const auto frozen = header.at("frozen").get<std::vector<std::vector<int>>>();
        if (frozen.size() != static_cast<std::size_t>(hp.num_layers)) {
            throw DataError(path.string() + ": frozen mask has wrong layer count");
        }
        for (int l = 0; l < hp.num_layers; ++l) {
            if (frozen[static_cast<std::size_t>(l)].size() != static_cast<std::size_t>(hp.modules_per_layer)) {
                throw DataError(path.string() + ": frozen mask has wrong module count");
            }
            for (int m = 0; m < hp.modules_per_layer; ++m) {
                out.bank.set_frozen(l, m, frozen[static_cast<std::size_t>(l)][static_cast<std::size_t>(m)] != 0);
            }
        }
        std::size_t cursor = 0;
        for (int l = 0; l < hp.num_layers; ++l) {
            for (int m = 0; m < hp.modules_per_layer; ++m) {
                take(c.payload, cursor, out.bank.module(l, m), "module/" + std::to_string(l) + "/" + std::to_string(m));
            }
        }
        for (const auto& h : header.at("heads")) {
            const auto name = h.at("name").get<std::string>();
            Linear<float> head(hp.module_width, h.at("classes").get<int>());
            take(c.payload, cursor, head, "head/" + name);
            out.bank.set_head(name, std::move(head));
        }
        if (cursor != c.payload.size()) {
            throw DataError(path.string() + ": trailing payload after last section");
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": malformed checkpoint header: " + e.what());
    } catch (const ConfigError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace pathnet
