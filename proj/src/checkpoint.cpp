#include "dnefc/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "dnefc/errors.hpp"

namespace dnefc {

namespace {

template <class T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

class Reader {
public:
    Reader(std::string bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}

    template <class T>
    T get(const char* what) {
        T v;
        need(sizeof v, what);
        std::memcpy(&v, bytes_.data() + pos_, sizeof v);
        pos_ += sizeof v;
        return v;
    }

    std::string_view take(std::size_t n, const char* what) {
        need(n, what);
        std::string_view s(bytes_.data() + pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
    const std::string& name() const noexcept { return name_; }

private:
    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) throw FormatError(name_ + ": checkpoint truncated while reading " + what);
    }

    std::string bytes_;
    std::string name_;
    std::size_t pos_ = 0;
};

} // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    if (ckpt.parent.param_count() != ckpt.spec.param_count()) {
        throw ValidationError("checkpoint genome does not match its network spec");
    }
    const std::string json = ckpt.spec.to_json().dump();
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(kCheckpointMagic, 8);
        put<std::uint64_t>(out, json.size());
        out.write(json.data(), static_cast<std::streamsize>(json.size()));
        put<std::uint64_t>(out, ckpt.parent.param_count());
        write_genome_payload(out, ckpt.parent.values);
        put<std::uint64_t>(out, ckpt.generation);
        put<std::uint64_t>(out, ckpt.master_seed);
        put<double>(out, ckpt.config.sigma);
        put<std::uint64_t>(out, ckpt.config.episodes_per_generation);
        put<double>(out, ckpt.config.elite_fraction);
        put<std::uint64_t>(out, ckpt.config.max_generations);
        put<std::uint64_t>(out, ckpt.config.early_stop_patience);
        put<std::uint64_t>(out, ckpt.perfect_streak);
        out.write(kCheckpointTrailer, 8);
        if (!out.flush()) throw IoError("failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    Reader r(std::string(std::istreambuf_iterator<char>(in), {}), path.string());

    if (r.take(8, "magic") != std::string_view(kCheckpointMagic, 8)) {
        throw FormatError(path.string() + ": not a checkpoint file (bad magic)");
    }
    const auto json_len = r.get<std::uint64_t>("spec length");
    if (json_len > r.remaining()) throw FormatError(path.string() + ": checkpoint truncated inside the network spec");
    const auto json_text = r.take(json_len, "network spec");
    nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
    if (j.is_discarded()) throw FormatError(path.string() + ": checkpoint network spec is not valid JSON");
    NetworkSpec spec = NetworkSpec::from_json(j);

    const auto count = r.get<std::uint64_t>("parameter count");
    if (count != spec.param_count()) {
        throw FormatError(path.string() + ": checkpoint stores " + std::to_string(count) + " parameters, spec needs " +
                          std::to_string(spec.param_count()));
    }
    if (count * sizeof(float) > r.remaining()) throw FormatError(path.string() + ": checkpoint truncated inside the genome");
    const auto raw = r.take(count * sizeof(float), "genome");
    std::vector<float> values(count);
    std::memcpy(values.data(), raw.data(), raw.size());

    Checkpoint c{std::move(spec), {}, 0, 0, {}, 0};
    c.parent = FlatGenome(c.spec, std::move(values));
    c.generation = r.get<std::uint64_t>("generation");
    c.master_seed = r.get<std::uint64_t>("master seed");
    c.config.master_seed = c.master_seed;
    c.config.sigma = r.get<double>("sigma");
    c.config.episodes_per_generation = r.get<std::uint64_t>("episodes");
    c.config.elite_fraction = r.get<double>("elite fraction");
    c.config.max_generations = r.get<std::uint64_t>("max generations");
    c.config.early_stop_patience = r.get<std::uint64_t>("patience");
    c.perfect_streak = r.get<std::uint64_t>("streak");
    if (r.take(8, "trailer") != std::string_view(kCheckpointTrailer, 8)) {
        throw FormatError(path.string() + ": checkpoint trailer is corrupt");
    }
    if (r.remaining() != 0) throw FormatError(path.string() + ": unexpected bytes after checkpoint trailer");
    try {
        c.config.validate();
    } catch (const ValidationError& e) {
        throw FormatError(path.string() + ": checkpoint config invalid: " + e.what());
    }
    return c;
}

Checkpoint make_checkpoint(const Trainer& trainer, const TrainerState& state) {
    return Checkpoint{trainer.spec(),          state.parent, state.generation, trainer.config().master_seed,
                      trainer.config(),        state.perfect_streak};
}

} // namespace dnefc
