#include "czta/synth.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace czta {

namespace {

class Gaussian {
public:
    explicit Gaussian(std::uint64_t seed) : rng_(seed) {}

    Vec vector(std::size_t d, double sigma) {
        Vec v(d);
        for (double& x : v) x = sigma * normal_(rng_);
        return v;
    }

    std::mt19937_64& engine() noexcept { return rng_; }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

Vec unit(const Vec& v) {
    auto n = l2_normalize(v);
    if (n.degenerate) {
        throw std::runtime_error("synth: degenerate vector");
    }
    return std::move(n.value);
}

void add_into(Vec& a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

// Fisher-Yates over an explicit engine so the result is library independent.
template <typename T>
void permute(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[static_cast<std::size_t>(rng() % i)]);
    }
}

}  // namespace

void SynthConfig::validate() const {
    if (num_attributes == 0 || num_objects == 0 || dim == 0) {
        throw std::invalid_argument("synth: vocabulary sizes and dim must be positive");
    }
    if (!(seen_fraction > 0.0 && seen_fraction < 1.0)) {
        throw std::invalid_argument("synth: seen_fraction must lie in (0, 1)");
    }
    if (num_attributes * num_objects < 2) {
        throw std::invalid_argument("synth: need at least two compositions");
    }
    if (!(sigma_v >= 0.0) || !(sigma_p >= 0.0) || !(unseen_shift >= 0.0)) {
        throw std::invalid_argument("synth: noise scales must be >= 0");
    }
    if (!(temperature > 0.0)) {
        throw std::invalid_argument("synth: temperature must be > 0");
    }
}

SynthData generate(const SynthConfig& cfg) {
    cfg.validate();
    Gaussian g(cfg.seed);
    const std::size_t d = cfg.dim;

    SynthData out;
    LabelSpace& ls = out.labels;
    for (std::size_t a = 0; a < cfg.num_attributes; ++a) ls.attributes.push_back("attr" + std::to_string(a));
    for (std::size_t o = 0; o < cfg.num_objects; ++o) ls.objects.push_back("obj" + std::to_string(o));

    std::vector<Vec> attr_emb, obj_emb;
    for (std::size_t a = 0; a < cfg.num_attributes; ++a) attr_emb.push_back(unit(g.vector(d, 1.0)));
    for (std::size_t o = 0; o < cfg.num_objects; ++o) obj_emb.push_back(unit(g.vector(d, 1.0)));

    std::vector<CompPair> all;
    for (std::uint32_t a = 0; a < cfg.num_attributes; ++a) {
        for (std::uint32_t o = 0; o < cfg.num_objects; ++o) all.push_back({a, o});
    }
    permute(all, g.engine());
    const auto total = all.size();
    auto n_seen = static_cast<std::size_t>(std::llround(cfg.seen_fraction * static_cast<double>(total)));
    n_seen = std::clamp<std::size_t>(n_seen, 1, total - 1);
    ls.seen_pairs.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_seen));
    ls.unseen_pairs.assign(all.begin() + static_cast<std::ptrdiff_t>(n_seen), all.end());
    std::sort(ls.seen_pairs.begin(), ls.seen_pairs.end());
    std::sort(ls.unseen_pairs.begin(), ls.unseen_pairs.end());
    ls.open_world = cfg.open_world;
    ls.test_pairs = make_test_pairs(ls);
    ls.validate();

    const auto seen = ls.seen_mask();
    const std::size_t n = ls.num_compositions();
    out.centers = Mat(n, d);
    out.bank.proto = Mat(n, d);
    out.bank.temperature = cfg.temperature;
    for (std::size_t c = 0; c < n; ++c) {
        const auto& p = ls.test_pairs[c];
        Vec mu = attr_emb[p.attr];
        add_into(mu, obj_emb[p.obj]);
        add_into(mu, g.vector(d, cfg.sigma_p));
        mu = unit(mu);
        Vec proto = mu;
        if (!seen[c]) {
            add_into(proto, g.vector(d, cfg.unseen_shift));
            proto = unit(proto);
        }
        std::copy(mu.begin(), mu.end(), out.centers.row(c).begin());
        std::copy(proto.begin(), proto.end(), out.bank.proto.row(c).begin());
    }

    // Open-world label spaces include pairs outside seen/unseen; only
    // seen + unseen compositions produce images.
    std::vector<std::size_t> order;
    for (std::size_t c = 0; c < n; ++c) {
        const bool in_split = seen[c] || std::binary_search(ls.unseen_pairs.begin(), ls.unseen_pairs.end(),
                                                            ls.test_pairs[c]);
        if (!in_split) continue;
        for (std::size_t k = 0; k < cfg.samples_per_composition; ++k) order.push_back(c);
    }
    permute(order, g.engine());

    out.features = Mat(order.size(), d);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const std::size_t c = order[i];
        Vec x(out.centers.row(c).begin(), out.centers.row(c).end());
        add_into(x, g.vector(d, cfg.sigma_v));
        x = unit(x);
        std::copy(x.begin(), x.end(), out.features.row(i).begin());
        out.stream_labels.push_back({ls.test_pairs[c].attr, ls.test_pairs[c].obj});
    }
    return out;
}

SynthPaths write_synth(const SynthData& data, const std::filesystem::path& prefix) {
    SynthPaths paths;
    paths.bank = prefix.string() + ".tmct-bank";
    paths.stream = prefix.string() + ".tmct-stream";
    save_prototype_bank(paths.bank, data.labels, data.bank);
    save_stream(paths.stream, data.features, data.stream_labels);
    if (data.labels.open_world) {
        paths.feasibility = prefix.string() + ".tmct-feas";
        save_feasibility(paths.feasibility, std::vector<double>(data.labels.num_compositions(), 1.0));
    }
    return paths;
}

}  // namespace czta
