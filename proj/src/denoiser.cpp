#include "dgen/denoiser.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "dgen/errors.hpp"
#include "dgen/forward.hpp"
#include "dgen/textio.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts unsupported");

namespace dgen {

std::string to_string(TimeFeatureMode m) {
    return m == TimeFeatureMode::Sinusoidal ? "sinusoidal" : "learned";
}

TimeFeatureMode time_mode_from_string(const std::string& s) {
    if (s == "sinusoidal") return TimeFeatureMode::Sinusoidal;
    if (s == "learned") return TimeFeatureMode::Learned;
    throw std::invalid_argument("time_mode: expected 'sinusoidal' or 'learned', got '" + s + "'");
}

std::string to_string(Weighting w) {
    return w == Weighting::Weighted ? "weighted" : "unweighted";
}

Weighting weighting_from_string(const std::string& s) {
    if (s == "weighted") return Weighting::Weighted;
    if (s == "unweighted") return Weighting::Unweighted;
    throw std::invalid_argument("weighting: expected 'weighted' or 'unweighted', got '" + s + "'");
}

void DenoiserParams::validate() const {
    if (layer_sizes.size() < 2)
        throw std::invalid_argument("DenoiserParams: need at least input and output layers");
    if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size())
        throw std::invalid_argument("DenoiserParams: weights/biases count must match layer chain");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].shape != std::vector<std::size_t>{layer_sizes[l + 1], layer_sizes[l]})
            throw std::invalid_argument("DenoiserParams: weight shape mismatch at layer " +
                                        std::to_string(l));
        if (biases[l].shape != std::vector<std::size_t>{layer_sizes[l + 1]})
            throw std::invalid_argument("DenoiserParams: bias shape mismatch at layer " +
                                        std::to_string(l));
        if (!weights[l].all_finite() || !biases[l].all_finite())
            throw std::invalid_argument("DenoiserParams: non-finite parameter at layer " +
                                        std::to_string(l));
    }
    if (layer_sizes.front() != data_dim + time_dim + cond_dim)
        throw std::invalid_argument(
            "DenoiserParams: input width must equal data_dim + time_dim + cond_dim");
    if (layer_sizes.back() != data_dim)
        throw std::invalid_argument("DenoiserParams: output width must equal data_dim");
    if (data_dim == 0) throw std::invalid_argument("DenoiserParams: data_dim must be positive");
    if (max_step < 1) throw std::invalid_argument("DenoiserParams: max_step must be >= 1");
    if (time_mode == TimeFeatureMode::Sinusoidal) {
        if (time_dim % 2 != 0)
            throw std::invalid_argument("DenoiserParams: sinusoidal time_dim must be even");
        if (time_table.numel() != 0)
            throw std::invalid_argument("DenoiserParams: sinusoidal mode must not carry a time table");
    } else {
        std::vector<std::size_t> want{static_cast<std::size_t>(max_step) + 1, time_dim};
        if (time_table.shape != want)
            throw std::invalid_argument("DenoiserParams: learned time table must be (max_step+1) x time_dim");
        if (!time_table.all_finite())
            throw std::invalid_argument("DenoiserParams: non-finite time table");
    }
    if (cond_dim > 0) {
        if (cond_table.shape.size() != 2 || cond_table.shape[0] == 0 ||
            cond_table.shape[1] != cond_dim)
            throw std::invalid_argument("DenoiserParams: condition table must be vocab x cond_dim");
        if (!cond_table.all_finite())
            throw std::invalid_argument("DenoiserParams: non-finite condition table");
    } else if (cond_table.numel() != 0) {
        throw std::invalid_argument("DenoiserParams: condition table present but cond_dim is 0");
    }
}

namespace {

// One symmetric-uniform draw in (-scale, scale).
double uniform_sym(Rng& rng, double scale) { return (2.0 * rng.uniform() - 1.0) * scale; }

}  // namespace

DenoiserParams init_denoiser(const DenoiserInit& cfg, Rng& rng) {
    if ((cfg.cond_vocab == 0) != (cfg.cond_dim == 0))
        throw std::invalid_argument("init_denoiser: cond_vocab and cond_dim must both be zero or both positive");
    DenoiserParams p;
    p.data_dim = cfg.data_dim;
    p.time_dim = cfg.time_dim;
    p.time_mode = cfg.time_mode;
    p.max_step = cfg.max_step;
    p.cond_dim = cfg.cond_dim;
    p.layer_sizes.push_back(cfg.data_dim + cfg.time_dim + cfg.cond_dim);
    for (std::size_t h : cfg.hidden_sizes) p.layer_sizes.push_back(h);
    p.layer_sizes.push_back(cfg.data_dim);

    for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
        std::size_t in = p.layer_sizes[l], out = p.layer_sizes[l + 1];
        if (in == 0 || out == 0)
            throw std::invalid_argument("init_denoiser: zero-width layer");
        Tensor w = Tensor::zeros({out, in});
        double scale = 1.0 / std::sqrt(static_cast<double>(in));
        for (double& v : w.data) v = uniform_sym(rng, scale);
        p.weights.push_back(std::move(w));
        p.biases.push_back(Tensor::zeros({out}));
    }
    if (cfg.time_mode == TimeFeatureMode::Learned) {
        p.time_table = Tensor::zeros({static_cast<std::size_t>(cfg.max_step) + 1, cfg.time_dim});
        double scale = 1.0 / std::sqrt(static_cast<double>(cfg.time_dim));
        for (double& v : p.time_table.data) v = uniform_sym(rng, scale);
    }
    if (cfg.cond_dim > 0) {
        p.cond_table = Tensor::zeros({cfg.cond_vocab, cfg.cond_dim});
        double scale = 1.0 / std::sqrt(static_cast<double>(cfg.cond_dim));
        for (double& v : p.cond_table.data) v = uniform_sym(rng, scale);
    }
    p.validate();
    return p;
}

Tensor time_features(const DenoiserParams& p, int t) {
    if (t < 0 || t > p.max_step)
        throw std::out_of_range("time_features: t must be in [0, max_step]");
    Tensor f = Tensor::zeros({p.time_dim});
    if (p.time_mode == TimeFeatureMode::Sinusoidal) {
        for (std::size_t k = 0; 2 * k < p.time_dim; ++k) {
            double freq = std::pow(10000.0, -2.0 * static_cast<double>(k) /
                                                static_cast<double>(p.time_dim));
            double angle = static_cast<double>(t) * freq;
            f.data[2 * k] = std::sin(angle);
            f.data[2 * k + 1] = std::cos(angle);
        }
    } else {
        const double* row = p.time_table.data.data() + static_cast<std::size_t>(t) * p.time_dim;
        for (std::size_t j = 0; j < p.time_dim; ++j) f.data[j] = row[j];
    }
    return f;
}

namespace {

// Assembles [x | time features | label embedding] and checks preconditions.
std::vector<double> build_input(const DenoiserParams& p, const Tensor& x, int t,
                                std::optional<int> cond) {
    if (x.numel() != p.data_dim)
        throw std::invalid_argument("net input must have data_dim components");
    if (p.cond_dim == 0 && cond.has_value())
        throw std::invalid_argument("condition label given but conditioning is disabled");
    if (p.cond_dim > 0 && !cond.has_value())
        throw std::invalid_argument("conditioning enabled but no label given");
    std::vector<double> in;
    in.reserve(p.layer_sizes.front());
    in.insert(in.end(), x.data.begin(), x.data.end());
    Tensor tf = time_features(p, t);
    in.insert(in.end(), tf.data.begin(), tf.data.end());
    if (p.cond_dim > 0) {
        int label = *cond;
        if (label < 0 || static_cast<std::size_t>(label) >= p.cond_vocab())
            throw std::out_of_range("unknown condition label " + std::to_string(label));
        const double* row =
            p.cond_table.data.data() + static_cast<std::size_t>(label) * p.cond_dim;
        in.insert(in.end(), row, row + p.cond_dim);
    }
    return in;
}

// h[0] = input, h[l] for 0 < l < L post-tanh, h[L] linear output.
using Activations = std::vector<std::vector<double>>;

void forward_pass(const DenoiserParams& p, std::vector<double> input, Activations& h) {
    std::size_t L = p.n_layers();
    h.clear();
    h.reserve(L + 1);
    h.push_back(std::move(input));
    for (std::size_t l = 0; l < L; ++l) {
        std::size_t rows = p.layer_sizes[l + 1], cols = p.layer_sizes[l];
        std::vector<double> a(rows);
        const std::vector<double>& x = h.back();
        for (std::size_t i = 0; i < rows; ++i) {
            double acc = p.biases[l].data[i];
            const double* row = p.weights[l].data.data() + i * cols;
            for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
            a[i] = (l + 1 < L) ? std::tanh(acc) : acc;
        }
        h.push_back(std::move(a));
    }
}

// delta = dL/d(output); accumulates parameter gradients into g. tanh
// derivative is recovered from the stored post-activation: 1 - h^2.
void backward_pass(const DenoiserParams& p, const Activations& h, std::vector<double> delta,
                   GradientBundle& g, int t, std::optional<int> cond) {
    std::size_t L = p.n_layers();
    std::vector<double> dh;
    for (std::size_t li = L; li-- > 0;) {
        std::size_t rows = p.layer_sizes[li + 1], cols = p.layer_sizes[li];
        const std::vector<double>& hin = h[li];
        dh.assign(cols, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            double d = delta[i];
            g.biases[li].data[i] += d;
            double* gw = g.weights[li].data.data() + i * cols;
            const double* w = p.weights[li].data.data() + i * cols;
            for (std::size_t j = 0; j < cols; ++j) {
                gw[j] += d * hin[j];
                dh[j] += w[j] * d;
            }
        }
        if (li > 0) {
            for (std::size_t j = 0; j < cols; ++j) dh[j] *= 1.0 - hin[j] * hin[j];
            delta = dh;
        }
    }
    // dh now holds dL/d(input); route the embedding slices to their tables.
    if (p.time_mode == TimeFeatureMode::Learned) {
        double* row = g.time_table.data.data() + static_cast<std::size_t>(t) * p.time_dim;
        for (std::size_t j = 0; j < p.time_dim; ++j) row[j] += dh[p.data_dim + j];
    }
    if (p.cond_dim > 0) {
        double* row =
            g.cond_table.data.data() + static_cast<std::size_t>(*cond) * p.cond_dim;
        for (std::size_t j = 0; j < p.cond_dim; ++j)
            row[j] += dh[p.data_dim + p.time_dim + j];
    }
}

}  // namespace

Tensor net_forward(const DenoiserParams& p, const Tensor& x, int t, std::optional<int> cond) {
    Activations h;
    forward_pass(p, build_input(p, x, t, cond), h);
    return Tensor(x.shape, std::move(h.back()));
}

Tensor predict_noise(const DenoiserParams& p, const Tensor& x_t, int t,
                     std::optional<int> cond) {
    if (t < 1) throw std::out_of_range("predict_noise: t must be >= 1");
    return net_forward(p, x_t, t, cond);
}

Tensor reverse_mean(const DenoiserParams& p, const Tensor& x_t, int t, const Schedule& s,
                    std::optional<int> cond) {
    return mean_from_noise(x_t, t, s, predict_noise(p, x_t, t, cond));
}

NoisePredictor as_predictor(const DenoiserParams& p) {
    return [params = p](const Tensor& x_t, int t, std::optional<int> cond) {
        return predict_noise(params, x_t, t, cond);
    };
}

GradientBundle GradientBundle::zeros_like(const DenoiserParams& p) {
    GradientBundle g;
    for (const Tensor& w : p.weights) g.weights.push_back(Tensor::zeros(w.shape));
    for (const Tensor& b : p.biases) g.biases.push_back(Tensor::zeros(b.shape));
    if (p.time_mode == TimeFeatureMode::Learned) g.time_table = Tensor::zeros(p.time_table.shape);
    if (p.cond_dim > 0) g.cond_table = Tensor::zeros(p.cond_table.shape);
    return g;
}

double GradientBundle::squared_norm() const {
    double s = 0.0;
    for (const Tensor& w : weights) s += squared_l2(w);
    for (const Tensor& b : biases) s += squared_l2(b);
    s += squared_l2(time_table);
    s += squared_l2(cond_table);
    return s;
}

double step_loss_weight(const Schedule& s, int t) {
    double beta = s.beta(t);
    double sigma_sq = s.sigma_sq(t);
    if (!(sigma_sq > 0.0))
        throw std::domain_error(
            "step_loss_weight: sigma_sq(t) is zero at t=" + std::to_string(t) +
            "; the weighted objective is undefined there");
    return beta * beta / (2.0 * sigma_sq * s.alpha(t) * (1.0 - s.alpha_bar(t)));
}

GradientBundle loss_and_grad(const DenoiserParams& p, const std::vector<NoiseBatchItem>& batch,
                             const Schedule& s, Weighting weighting) {
    if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
    GradientBundle g = GradientBundle::zeros_like(p);
    double inv_b = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    Activations h;
    for (const NoiseBatchItem& item : batch) {
        require_same_shape(item.x0, item.z, "loss_and_grad");
        if (item.t < 1 || item.t > p.max_step)
            throw std::out_of_range("loss_and_grad: t=" + std::to_string(item.t) +
                                    " outside [1, max_step]");
        double w = weighting == Weighting::Weighted ? step_loss_weight(s, item.t) : 1.0;
        Tensor x_t = mix_marginal(item.x0, s.alpha_bar(item.t), item.z);
        forward_pass(p, build_input(p, x_t, item.t, item.cond), h);
        const std::vector<double>& out = h.back();
        std::vector<double> delta(out.size());
        double sq = 0.0;
        for (std::size_t j = 0; j < out.size(); ++j) {
            double r = out[j] - item.z.data[j];
            sq += r * r;
            delta[j] = 2.0 * w * inv_b * r;
        }
        loss += w * sq;
        backward_pass(p, h, std::move(delta), g, item.t, item.cond);
    }
    g.loss_value = loss * inv_b;
    return g;
}

GradientBundle l1_loss_and_grad(const DenoiserParams& p,
                                const std::vector<RestoreBatchItem>& batch) {
    if (batch.empty()) throw std::invalid_argument("l1_loss_and_grad: empty batch");
    GradientBundle g = GradientBundle::zeros_like(p);
    double inv_b = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    Activations h;
    for (const RestoreBatchItem& item : batch) {
        require_same_shape(item.x_in, item.target, "l1_loss_and_grad");
        if (item.t < 0 || item.t > p.max_step)
            throw std::out_of_range("l1_loss_and_grad: t=" + std::to_string(item.t) +
                                    " outside [0, max_step]");
        forward_pass(p, build_input(p, item.x_in, item.t, std::nullopt), h);
        const std::vector<double>& out = h.back();
        std::vector<double> delta(out.size());
        for (std::size_t j = 0; j < out.size(); ++j) {
            double r = out[j] - item.target.data[j];
            loss += std::abs(r);
            delta[j] = (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) * inv_b;
        }
        backward_pass(p, h, std::move(delta), g, item.t, std::nullopt);
    }
    g.loss_value = loss * inv_b;
    return g;
}

// ---------------------------------------------------------------------------
// Checkpoint serialization
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'D', 'G', 'E', 'N', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& b, std::uint32_t v) {
    char raw[4];
    std::memcpy(raw, &v, 4);
    b.append(raw, 4);
}
void put_u64(std::string& b, std::uint64_t v) {
    char raw[8];
    std::memcpy(raw, &v, 8);
    b.append(raw, 8);
}
void put_f64_array(std::string& b, const std::vector<double>& v) {
    b.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}

struct Cursor {
    const std::string& buf;
    std::size_t off = 0;

    void need(std::size_t n) {
        if (off + n > buf.size()) throw artifact_error("checkpoint truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, buf.data() + off, 4);
        off += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v;
        std::memcpy(&v, buf.data() + off, 8);
        off += 8;
        return v;
    }
    std::vector<double> f64_array(std::size_t n) {
        need(n * sizeof(double));
        std::vector<double> v(n);
        std::memcpy(v.data(), buf.data() + off, n * sizeof(double));
        off += n * sizeof(double);
        return v;
    }
};

constexpr std::uint64_t kMaxCheckpointDim = 1u << 24;  // guards corrupt headers

std::size_t checked_dim(std::uint64_t v, const char* what) {
    if (v > kMaxCheckpointDim)
        throw artifact_error(std::string("checkpoint header: implausible ") + what);
    return static_cast<std::size_t>(v);
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& c) {
    c.params.validate();
    std::string b;
    b.append(kMagic, sizeof(kMagic));
    put_u32(b, kVersion);
    put_u32(b, c.params.time_mode == TimeFeatureMode::Sinusoidal ? 0u : 1u);
    put_u64(b, c.params.data_dim);
    put_u64(b, c.params.time_dim);
    put_u64(b, c.params.cond_dim);
    put_u64(b, c.params.cond_vocab());
    put_u64(b, static_cast<std::uint64_t>(c.params.max_step));
    put_u64(b, c.params.layer_sizes.size());
    for (std::size_t sz : c.params.layer_sizes) put_u64(b, sz);
    put_u64(b, c.schedule_fingerprint);
    put_u64(b, c.step);
    for (const Tensor& w : c.params.weights) put_f64_array(b, w.data);
    for (const Tensor& bi : c.params.biases) put_f64_array(b, bi.data);
    if (c.params.time_mode == TimeFeatureMode::Learned) put_f64_array(b, c.params.time_table.data);
    if (c.params.cond_dim > 0) put_f64_array(b, c.params.cond_table.data);
    atomic_write_file(path, b);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::string buf;
    try {
        buf = read_file(path);
    } catch (const std::exception& e) {
        throw artifact_error("checkpoint unreadable: " + std::string(e.what()));
    }
    Cursor c{buf};
    c.need(sizeof(kMagic));
    if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
        throw artifact_error("checkpoint magic mismatch: not a checkpoint file");
    c.off = sizeof(kMagic);
    if (c.u32() != kVersion) throw artifact_error("checkpoint version unsupported");

    Checkpoint out;
    DenoiserParams& p = out.params;
    std::uint32_t mode = c.u32();
    if (mode > 1) throw artifact_error("checkpoint: unknown time-feature mode");
    p.time_mode = mode == 0 ? TimeFeatureMode::Sinusoidal : TimeFeatureMode::Learned;
    p.data_dim = checked_dim(c.u64(), "data_dim");
    p.time_dim = checked_dim(c.u64(), "time_dim");
    p.cond_dim = checked_dim(c.u64(), "cond_dim");
    std::size_t vocab = checked_dim(c.u64(), "cond_vocab");
    p.max_step = static_cast<int>(checked_dim(c.u64(), "max_step"));
    std::size_t n_sizes = checked_dim(c.u64(), "layer count");
    for (std::size_t i = 0; i < n_sizes; ++i)
        p.layer_sizes.push_back(checked_dim(c.u64(), "layer size"));
    out.schedule_fingerprint = c.u64();
    out.step = c.u64();
    if (p.layer_sizes.size() < 2) throw artifact_error("checkpoint: fewer than two layers");
    for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
        std::size_t rows = p.layer_sizes[l + 1], cols = p.layer_sizes[l];
        p.weights.push_back(Tensor({rows, cols}, c.f64_array(rows * cols)));
    }
    for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
        std::size_t rows = p.layer_sizes[l + 1];
        p.biases.push_back(Tensor({rows}, c.f64_array(rows)));
    }
    if (p.time_mode == TimeFeatureMode::Learned) {
        std::size_t rows = static_cast<std::size_t>(p.max_step) + 1;
        p.time_table = Tensor({rows, p.time_dim}, c.f64_array(rows * p.time_dim));
    }
    if (p.cond_dim > 0) {
        if (vocab == 0) throw artifact_error("checkpoint: cond_dim set but vocab empty");
        p.cond_table = Tensor({vocab, p.cond_dim}, c.f64_array(vocab * p.cond_dim));
    }
    if (c.off != buf.size()) throw artifact_error("checkpoint has trailing bytes");
    try {
        p.validate();
    } catch (const std::exception& e) {
        throw artifact_error("checkpoint inconsistent: " + std::string(e.what()));
    }
    return out;
}

}  // namespace dgen
