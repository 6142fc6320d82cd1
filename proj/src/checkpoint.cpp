#include "rogmc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "rogmc/error.hpp"

namespace rogmc {
namespace {

constexpr const char* kFormatTag = "rogmc-checkpoint";
constexpr int kFormatVersion = 1;

void write_floats(std::ostream& out, std::span<const double> values) {
    std::vector<char> buffer(values.size() * 4);
    for (std::size_t k = 0; k < values.size(); ++k) {
        auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[k]));
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        std::memcpy(buffer.data() + 4 * k, &bits, 4);
    }
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
}

void read_floats(std::istream& in, std::span<double> values, const std::string& what) {
    std::vector<char> buffer(values.size() * 4);
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    if (in.gcount() != static_cast<std::streamsize>(buffer.size())) throw Error("checkpoint truncated in " + what);
    for (std::size_t k = 0; k < values.size(); ++k) {
        std::uint32_t bits = 0;
        std::memcpy(&bits, buffer.data() + 4 * k, 4);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        values[k] = std::bit_cast<float>(bits);
    }
}

template <typename T>
T field(const nlohmann::json& j, const char* name) {
    if (!j.contains(name)) throw Error(std::string("checkpoint header is missing field '") + name + "'");
    try {
        return j.at(name).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(std::string("checkpoint header field '") + name + "' has the wrong type");
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const CheckpointHeader& header, const ModelParams& params) {
    params.validate();
    if (params.num_nodes() != header.num_nodes || params.dim() != header.dim ||
        params.rating_set != header.rating_set) {
        throw std::invalid_argument("checkpoint header does not describe the parameters");
    }
    nlohmann::json j;
    j["format"] = kFormatTag;
    j["version"] = kFormatVersion;
    j["N"] = header.num_nodes;
    j["num_users"] = header.num_users;
    j["d"] = header.dim;
    j["num_ratings"] = header.rating_set.size();
    j["rating_set"] = header.rating_set;
    j["T"] = header.thresholds;
    j["mode"] = to_string(header.mode);
    j["seed"] = header.seed;
    j["layers"] = header.layers;
    j["aggregation"] = to_string(header.aggregation);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out << j.dump() << '\n';
    write_floats(out, params.base.flat());
    for (const Matrix& q : params.bilinear) write_floats(out, q.flat());
    if (!out) throw Error("write failed for checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw Error("checkpoint has no header");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("checkpoint header is not valid JSON: ") + e.what());
    }
    if (field<std::string>(j, "format") != kFormatTag) throw Error("checkpoint header field 'format' is not recognized");
    if (field<int>(j, "version") != kFormatVersion) throw Error("checkpoint header field 'version' is unsupported");

    Checkpoint ckpt;
    auto& h = ckpt.header;
    h.num_nodes = field<std::size_t>(j, "N");
    h.num_users = field<std::size_t>(j, "num_users");
    h.dim = field<std::size_t>(j, "d");
    h.rating_set = field<std::vector<int>>(j, "rating_set");
    if (field<std::size_t>(j, "num_ratings") != h.rating_set.size()) {
        throw Error("checkpoint header field 'num_ratings' disagrees with 'rating_set'");
    }
    h.thresholds = field<std::vector<int>>(j, "T");
    try {
        h.mode = parse_decomposition_mode(field<std::string>(j, "mode"));
        h.aggregation = parse_aggregation(field<std::string>(j, "aggregation"));
    } catch (const std::invalid_argument& e) {
        throw Error(std::string("checkpoint header: ") + e.what());
    }
    h.seed = field<std::uint64_t>(j, "seed");
    h.layers = field<std::size_t>(j, "layers");
    if (h.dim == 0) throw Error("checkpoint header field 'd' must be >= 1");

    auto& p = ckpt.params;
    p.rating_set = h.rating_set;
    p.base = Matrix(h.num_nodes, h.dim);
    read_floats(in, p.base.flat(), "base embeddings");
    for (std::size_t r = 0; r < h.rating_set.size(); ++r) {
        Matrix q(h.dim, h.dim);
        read_floats(in, q.flat(), "bilinear matrix " + std::to_string(r));
        p.bilinear.push_back(std::move(q));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw Error("checkpoint has trailing bytes");
    return ckpt;
}

void check_compatible(const CheckpointHeader& header, const DecomposedGraphs& graphs,
                      const std::vector<int>& rating_set) {
    if (header.num_nodes != graphs.num_nodes()) {
        throw Error("checkpoint header field 'N' (" + std::to_string(header.num_nodes) +
                    ") does not match the dataset (" + std::to_string(graphs.num_nodes()) + ")");
    }
    if (header.num_users != graphs.num_users()) throw Error("checkpoint header field 'num_users' does not match the dataset");
    if (header.rating_set != rating_set) throw Error("checkpoint header field 'rating_set' does not match the dataset");
    if (header.mode != graphs.mode) throw Error("checkpoint header field 'mode' does not match the requested graphs");
    if (header.thresholds != graphs.thresholds) throw Error("checkpoint header field 'T' does not match the requested graphs");
}

}  // namespace rogmc
