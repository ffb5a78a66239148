#pragma once

#include "toothfuse/core.hpp"
#include "toothfuse/rng.hpp"
#include "toothfuse/sdf_sample.hpp"

#include <cstring>
#include <fstream>
#include <functional>
#include <string>

namespace toothfuse {

// Auto-decoder SDF MLP: input [x; z], n_hidden fully-connected ReLU layers
// of uniform width with the input re-concatenated at skip_layer, and a
// 1-unit tanh output layer. f(x, z) = s in (-1, 1).
struct SdfNetwork {
    int latent_dim = 32;
    int hidden = 256;
    int n_hidden = 8;
    int skip_layer = 4;  // input to this layer is [h_{skip-1}; x; z]
    std::vector<Eigen::MatrixXd> w;  // n_hidden+1 matrices, out x in
    std::vector<Eigen::VectorXd> b;

    int input_dim() const { return latent_dim + 3; }
    int layer_count() const { return n_hidden + 1; }
    int layer_in(int l) const {
        if (l == 0) return input_dim();
        if (l == skip_layer) return hidden + input_dim();
        return hidden;
    }
    int layer_out(int l) const { return l == n_hidden ? 1 : hidden; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (int l = 0; l < layer_count(); ++l)
            n += static_cast<std::size_t>(layer_out(l)) * layer_in(l) + layer_out(l);
        return n;
    }

    void validate() const {
        if (latent_dim < 1 || hidden < 1 || n_hidden < 2)
            throw Error("SdfNetwork: invalid architecture");
        if (skip_layer < 1 || skip_layer >= n_hidden)
            throw Error("SdfNetwork: skip layer must be an interior hidden layer");
        if (static_cast<int>(w.size()) != layer_count() || b.size() != w.size())
            throw Error("SdfNetwork: layer count mismatch");
        for (int l = 0; l < layer_count(); ++l) {
            if (w[l].rows() != layer_out(l) || w[l].cols() != layer_in(l) ||
                b[l].size() != layer_out(l))
                throw Error("SdfNetwork: layer shape mismatch");
            if (!w[l].allFinite() || !b[l].allFinite())
                throw Error("SdfNetwork: non-finite parameter");
        }
    }

    // He initialization on hidden layers. The output layer starts near zero:
    // the clamped loss has zero subgradient at |prediction| >= delta, so initial
    // outputs must land inside the live band or those samples never learn.
    static SdfNetwork create(int latent_dim = 32, int hidden = 256, int n_hidden = 8,
                             int skip_layer = 4, std::uint64_t seed = 0) {
        SdfNetwork net;
        net.latent_dim = latent_dim;
        net.hidden = hidden;
        net.n_hidden = n_hidden;
        net.skip_layer = skip_layer;
        Rng rng(seed);
        for (int l = 0; l < net.layer_count(); ++l) {
            const int rows = net.layer_out(l), cols = net.layer_in(l);
            const double std = l == n_hidden ? 1e-2 * std::sqrt(1.0 / cols)
                                             : std::sqrt(2.0 / cols);
            Eigen::MatrixXd m(rows, cols);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) m(r, c) = std * rng.gaussian();
            net.w.push_back(std::move(m));
            net.b.push_back(Eigen::VectorXd::Zero(rows));
        }
        net.validate();
        return net;
    }
};

struct ForwardCache {
    Eigen::MatrixXd input;               // in_dim x N
    std::vector<Eigen::MatrixXd> pre;    // pre-activations per layer
    std::vector<Eigen::MatrixXd> act;    // post-activations of hidden layers
    Eigen::RowVectorXd y;                // tanh output, 1 x N
};

namespace detail {

inline Eigen::MatrixXd sdf_input_matrix(const SdfNetwork& net, const Eigen::VectorXd& z,
                                        const Vec3* xs, std::size_t n) {
    Eigen::MatrixXd x0(net.input_dim(), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        x0.block<3, 1>(0, static_cast<Eigen::Index>(j)) = xs[j];
        x0.col(static_cast<Eigen::Index>(j)).tail(net.latent_dim) = z;
    }
    return x0;
}

// Linear layers are evaluated column by column (matrix-vector products). A
// column's bits then depend only on the layer and that column's content,
// never on the batch width, which is what makes batch forwards bitwise
// identical to single forwards. Matrix-matrix kernels round differently at
// different widths and would break that.
inline Eigen::MatrixXd linear_by_column(const Eigen::MatrixXd& w,
                                        const Eigen::VectorXd& b,
                                        const Eigen::MatrixXd& in) {
    Eigen::MatrixXd pre(w.rows(), in.cols());
    for (Eigen::Index j = 0; j < in.cols(); ++j) {
        pre.col(j).noalias() = w * in.col(j);
        pre.col(j) += b;
    }
    return pre;
}

inline Eigen::VectorXd forward_impl(const SdfNetwork& net, const Eigen::VectorXd& z,
                                    const Vec3* xs, std::size_t n, ForwardCache* cache,
                                    bool column_exact) {
    if (z.size() != net.latent_dim) throw Error("forward: latent dimension mismatch");
    if (n == 0) throw Error("forward: empty batch");
    Eigen::MatrixXd x0 = sdf_input_matrix(net, z, xs, n);
    if (cache) {
        cache->input = x0;
        cache->pre.assign(net.layer_count(), {});
        cache->act.assign(net.n_hidden, {});
    }
    Eigen::MatrixXd a = x0;
    for (int l = 0; l < net.layer_count(); ++l) {
        Eigen::MatrixXd in;
        if (l == net.skip_layer) {
            in.resize(net.hidden + net.input_dim(), a.cols());
            in.topRows(net.hidden) = a;
            in.bottomRows(net.input_dim()) = x0;
        } else {
            in = std::move(a);
        }
        Eigen::MatrixXd pre;
        if (column_exact) {
            pre = linear_by_column(net.w[l], net.b[l], in);
        } else {
            pre.noalias() = net.w[l] * in;
            pre.colwise() += net.b[l];
        }
        if (cache) cache->pre[l] = pre;
        if (l < net.n_hidden) {
            a = pre.cwiseMax(0.0);
            if (cache) cache->act[l] = a;
        } else {
            a = pre.array().tanh().matrix();
        }
    }
    Eigen::RowVectorXd y = a.row(0);
    if (cache) cache->y = y;
    return y.transpose();
}

// Internal fast path: matrix-matrix kernels, so a value may differ from the
// column-exact public forward in the last ulp and may depend on the batch
// width. Loss evaluation and grid sweeps use this; they only need
// determinism for a fixed batch layout, which sequential GEMM provides.
inline Eigen::VectorXd forward_batch_gemm(const SdfNetwork& net, const Eigen::VectorXd& z,
                                          const Vec3* xs, std::size_t n,
                                          ForwardCache* cache = nullptr) {
    return forward_impl(net, z, xs, n, cache, false);
}

}  // namespace detail

// Batch forward pass. The returned vector has one entry per input point;
// entry j is bitwise identical to a single forward of point j.
inline Eigen::VectorXd forward_batch(const SdfNetwork& net, const Eigen::VectorXd& z,
                                     const Vec3* xs, std::size_t n,
                                     ForwardCache* cache = nullptr) {
    return detail::forward_impl(net, z, xs, n, cache, true);
}

inline Eigen::VectorXd forward_batch(const SdfNetwork& net, const Eigen::VectorXd& z,
                                     const std::vector<Vec3>& xs,
                                     ForwardCache* cache = nullptr) {
    return forward_batch(net, z, xs.data(), xs.size(), cache);
}

inline double forward(const SdfNetwork& net, const Eigen::VectorXd& z, const Vec3& x) {
    return forward_batch(net, z, &x, 1)(0);
}

struct NetGrads {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    Eigen::VectorXd z;

    void set_zero(const SdfNetwork& net) {
        w.resize(net.layer_count());
        b.resize(net.layer_count());
        for (int l = 0; l < net.layer_count(); ++l) {
            w[l] = Eigen::MatrixXd::Zero(net.layer_out(l), net.layer_in(l));
            b[l] = Eigen::VectorXd::Zero(net.layer_out(l));
        }
        z = Eigen::VectorXd::Zero(net.latent_dim);
    }
};

namespace detail {

// Backpropagates dL/dy through the cached forward pass. Accumulates
// parameter gradients into `grads` (unless null) and always accumulates the
// latent gradient (sum of the layer-0 and skip-connection input paths).
inline void backward_batch(const SdfNetwork& net, const ForwardCache& cache,
                           const Eigen::RowVectorXd& dy, NetGrads* grads,
                           Eigen::VectorXd& z_grad) {
    const Eigen::Index cols = cache.input.cols();
    Eigen::MatrixXd delta =
        (dy.array() * (1.0 - cache.y.array().square())).matrix();
    Eigen::MatrixXd dx0 = Eigen::MatrixXd::Zero(net.input_dim(), cols);

    for (int l = net.layer_count() - 1; l >= 0; --l) {
        if (grads) {
            Eigen::MatrixXd in;
            const Eigen::MatrixXd& below =
                l == 0 ? cache.input : cache.act[l - 1];
            if (l == net.skip_layer) {
                in.resize(net.hidden + net.input_dim(), cols);
                in.topRows(net.hidden) = below;
                in.bottomRows(net.input_dim()) = cache.input;
                grads->w[l] += delta * in.transpose();
            } else {
                grads->w[l] += delta * below.transpose();
            }
            grads->b[l] += delta.rowwise().sum();
        }
        Eigen::MatrixXd din = net.w[l].transpose() * delta;
        if (l == 0) {
            dx0 += din;
            break;
        }
        Eigen::MatrixXd da;
        if (l == net.skip_layer) {
            da = din.topRows(net.hidden);
            dx0 += din.bottomRows(net.input_dim());
        } else {
            da = std::move(din);
        }
        // ReLU subgradient: 0 at exactly 0
        delta = (da.array() * (cache.pre[l - 1].array() > 0.0).cast<double>()).matrix();
    }
    z_grad += dx0.bottomRows(net.latent_dim).rowwise().sum();
}

inline double clamp_sym(double v, double d) { return std::clamp(v, -d, d); }

}  // namespace detail

struct LossParams {
    double delta = 0.1;    // clamp half-width
    double lambda = 1e-4;  // latent regularization weight
};

// Clamped-L1 auto-decoder loss over a sample set:
//   L = (1/N) sum_i |clamp(f(x_i, z), ±delta) - clamp(s_i, ±delta)| + lambda |z|^2.
// Subgradient conventions: d/dv clamp(v) = 0 at |v| >= delta, sign(0) = 0.
// Parameter gradients are accumulated when theta_grads is non-null; the
// latent gradient is accumulated when z_grad is non-null. Samples are
// processed in fixed-size blocks in order, so results are deterministic.
inline double loss_clamped_l1(const SdfNetwork& net, const Eigen::VectorXd& z,
                              const SdfSample* samples, std::size_t n,
                              const LossParams& p, NetGrads* theta_grads = nullptr,
                              Eigen::VectorXd* z_grad = nullptr) {
    if (!(p.delta > 0.0)) throw Error("loss_clamped_l1: delta must be positive");
    if (n == 0) throw Error("loss_clamped_l1: empty sample set");
    const bool want_grads = theta_grads || z_grad;
    const double inv_n = 1.0 / static_cast<double>(n);

    constexpr std::size_t kBlock = 1024;
    std::vector<Vec3> xs(std::min(n, kBlock));
    Eigen::VectorXd zg = Eigen::VectorXd::Zero(net.latent_dim);
    double data_loss = 0.0;

    for (std::size_t lo = 0; lo < n; lo += kBlock) {
        const std::size_t m = std::min(kBlock, n - lo);
        for (std::size_t i = 0; i < m; ++i) xs[i] = samples[lo + i].position;

        ForwardCache cache;
        Eigen::VectorXd y =
            detail::forward_batch_gemm(net, z, xs.data(), m, want_grads ? &cache : nullptr);

        Eigen::RowVectorXd dy;
        if (want_grads) dy = Eigen::RowVectorXd::Zero(cache.input.cols());
        for (std::size_t i = 0; i < m; ++i) {
            const double cy = detail::clamp_sym(y(i), p.delta);
            const double cs = detail::clamp_sym(samples[lo + i].s, p.delta);
            const double r = cy - cs;
            data_loss += std::abs(r);
            if (want_grads && std::abs(y(i)) < p.delta && r != 0.0)
                dy(i) = inv_n * (r > 0.0 ? 1.0 : -1.0);
        }
        if (want_grads) detail::backward_batch(net, cache, dy, theta_grads, zg);
    }

    double loss = data_loss * inv_n + p.lambda * z.squaredNorm();
    if (z_grad) *z_grad += zg + 2.0 * p.lambda * z;
    return loss;
}

inline double loss_clamped_l1(const SdfNetwork& net, const Eigen::VectorXd& z,
                              const std::vector<SdfSample>& samples,
                              const LossParams& p, NetGrads* theta_grads = nullptr,
                              Eigen::VectorXd* z_grad = nullptr) {
    return loss_clamped_l1(net, z, samples.data(), samples.size(), p, theta_grads,
                           z_grad);
}

// ---------------------------------------------------------------------------
// Optimizer

struct AdamParams {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam moments for one flat parameter vector.
class AdamBuffer {
public:
    void step(Eigen::Ref<Eigen::VectorXd> param,
              const Eigen::Ref<const Eigen::VectorXd>& grad, const AdamParams& hp) {
        if (m_.size() != param.size()) {
            m_ = Eigen::VectorXd::Zero(param.size());
            v_ = Eigen::VectorXd::Zero(param.size());
            t_ = 0;
        }
        ++t_;
        m_ = hp.beta1 * m_ + (1.0 - hp.beta1) * grad;
        v_ = hp.beta2 * v_ + (1.0 - hp.beta2) * grad.cwiseProduct(grad);
        const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(t_));
        param -= (hp.lr / c1) * m_.cwiseQuotient(
                     ((v_ / c2).cwiseSqrt().array() + hp.eps).matrix());
    }

private:
    Eigen::VectorXd m_, v_;
    long t_ = 0;
};

// ---------------------------------------------------------------------------
// Training and latent fitting

struct TrainConfig {
    int latent_dim = 32;
    int hidden = 256;
    int n_hidden = 8;
    int skip_layer = 4;
    std::size_t n_surface = 8000;  // per-shape sample counts (used by callers
    std::size_t n_free = 2000;     // that generate the sample sets)
    double delta = 0.1;
    double lambda = 1e-4;
    double lr = 1e-3;
    double lr_decay = 0.5;       // multiplicative, applied every lr_decay_every epochs
    int lr_decay_every = 500;    // 0 disables decay
    int epochs = 800;
    int batch_size = 512;
    double latent_init_sigma = 0.01;
    std::uint64_t seed = 0;
    // progress hook, called after each epoch; not part of determinism state
    std::function<void(int, const struct TrainedModel&)> epoch_callback;
};

struct FitConfig {
    double delta = 0.1;
    double lambda = 1e-2;
    double lr = 5e-3;
    int iterations = 800;
    int batch_size = 512;  // samples per gradient step; 0 = full set
    int eval_every = 25;   // full-set loss checkpoint period
    std::uint64_t seed = 0;
};

struct TrainedModel {
    SdfNetwork net;
    std::vector<Eigen::VectorXd> latents;
    std::vector<double> loss_trace;  // mean minibatch loss per epoch

    Eigen::VectorXd mean_latent() const {
        if (latents.empty()) throw Error("mean_latent: no training latents");
        Eigen::VectorXd m = Eigen::VectorXd::Zero(latents.front().size());
        for (const Eigen::VectorXd& z : latents) m += z;
        return m / static_cast<double>(latents.size());
    }
};

// Jointly optimizes network parameters and one latent per shape with Adam on
// per-shape minibatches. Deterministic for a fixed seed.
inline TrainedModel train_auto_decoder(const std::vector<std::vector<SdfSample>>& shapes,
                                       const TrainConfig& cfg) {
    if (shapes.size() < 2) throw Error("train_auto_decoder: need at least 2 shapes");
    std::vector<std::vector<SdfSample>> clean(shapes.size());
    for (std::size_t k = 0; k < shapes.size(); ++k) {
        clean[k] = sanitize_samples(shapes[k], "train_auto_decoder");
        if (clean[k].empty()) throw Error("train_auto_decoder: shape with no samples");
    }

    TrainedModel model;
    model.net = SdfNetwork::create(cfg.latent_dim, cfg.hidden, cfg.n_hidden,
                                   cfg.skip_layer, cfg.seed);
    Rng rng(cfg.seed ^ 0x5851f42d4c957f2dull);
    model.latents.resize(shapes.size());
    for (Eigen::VectorXd& z : model.latents) {
        z.resize(cfg.latent_dim);
        for (int i = 0; i < cfg.latent_dim; ++i)
            z(i) = cfg.latent_init_sigma * rng.gaussian();
    }

    SdfNetwork& net = model.net;
    std::vector<AdamBuffer> w_opt(net.layer_count()), b_opt(net.layer_count());
    std::vector<AdamBuffer> z_opt(shapes.size());
    AdamParams hp;
    hp.lr = cfg.lr;
    LossParams lp{cfg.delta, cfg.lambda};

    NetGrads grads;
    std::vector<SdfSample> batch;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (std::size_t k = 0; k < clean.size(); ++k) {
            const std::vector<SdfSample>& pool = clean[k];
            const std::size_t bs =
                std::min<std::size_t>(pool.size(), static_cast<std::size_t>(cfg.batch_size));
            batch.resize(bs);
            for (std::size_t i = 0; i < bs; ++i)
                batch[i] = pool[rng.uniform_index(pool.size())];

            grads.set_zero(net);
            double loss = loss_clamped_l1(net, model.latents[k], batch, lp, &grads,
                                          &grads.z);
            if (!std::isfinite(loss))
                throw DivergedError("train_auto_decoder: non-finite loss");
            epoch_loss += loss;

            for (int l = 0; l < net.layer_count(); ++l) {
                Eigen::Map<Eigen::VectorXd> wv(net.w[l].data(), net.w[l].size());
                Eigen::Map<const Eigen::VectorXd> gw(grads.w[l].data(),
                                                     grads.w[l].size());
                w_opt[l].step(wv, gw, hp);
                b_opt[l].step(net.b[l], grads.b[l], hp);
            }
            z_opt[k].step(model.latents[k], grads.z, hp);
        }
        model.loss_trace.push_back(epoch_loss / static_cast<double>(shapes.size()));
        if (cfg.lr_decay_every > 0 && (epoch + 1) % cfg.lr_decay_every == 0)
            hp.lr *= cfg.lr_decay;
        if (cfg.epoch_callback) cfg.epoch_callback(epoch, model);
    }
    return model;
}

struct FitResult {
    Eigen::VectorXd z;               // argmin over the evaluated trajectory
    double best_loss = 0.0;
    std::vector<double> loss_trace;  // full-set loss at checkpoints, entry 0 = init
};

// Fits a latent to samples with the network frozen. Gradient steps use
// seeded minibatches; the full-set loss is evaluated at fixed checkpoints
// and the best latent encountered at a checkpoint is returned, not the last.
inline FitResult optimize_latent(const SdfNetwork& net, const Eigen::VectorXd& init,
                                 const std::vector<SdfSample>& raw_samples,
                                 const FitConfig& cfg) {
    if (init.size() != net.latent_dim)
        throw Error("optimize_latent: init dimension mismatch");
    const std::vector<SdfSample> samples = sanitize_samples(raw_samples, "optimize_latent");
    if (samples.empty()) throw Error("optimize_latent: empty sample set");

    LossParams lp{cfg.delta, cfg.lambda};
    AdamParams hp;
    hp.lr = cfg.lr;
    AdamBuffer opt;
    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

    FitResult res;
    Eigen::VectorXd z = init;
    res.z = z;
    res.best_loss = loss_clamped_l1(net, z, samples, lp);
    if (!std::isfinite(res.best_loss))
        throw DivergedError("optimize_latent: non-finite loss");
    res.loss_trace.push_back(res.best_loss);

    const std::size_t bs = cfg.batch_size <= 0
                               ? samples.size()
                               : std::min<std::size_t>(samples.size(),
                                                       static_cast<std::size_t>(cfg.batch_size));
    const int eval_every = cfg.eval_every <= 0 ? 1 : cfg.eval_every;
    std::vector<SdfSample> batch(bs);
    Eigen::VectorXd g(net.latent_dim);
    for (int it = 0; it < cfg.iterations; ++it) {
        if (bs == samples.size()) {
            batch = samples;
        } else {
            for (std::size_t i = 0; i < bs; ++i)
                batch[i] = samples[rng.uniform_index(samples.size())];
        }
        g.setZero();
        double step_loss = loss_clamped_l1(net, z, batch, lp, nullptr, &g);
        if (!std::isfinite(step_loss))
            throw DivergedError("optimize_latent: non-finite loss");
        opt.step(z, g, hp);

        if ((it + 1) % eval_every == 0 || it + 1 == cfg.iterations) {
            double loss = loss_clamped_l1(net, z, samples, lp);
            if (!std::isfinite(loss))
                throw DivergedError("optimize_latent: non-finite loss");
            res.loss_trace.push_back(loss);
            if (loss < res.best_loss) {
                res.best_loss = loss;
                res.z = z;
            }
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Persistence: magic "IFSD", version, architecture header, little-endian
// f32 parameter blob, then the per-shape latent table.

inline void save_model(const std::string& path, const TrainedModel& model,
                       const std::string& manifest_text = {}) {
    model.net.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    auto put_u32 = [&out](std::uint32_t v) {
        out.write(reinterpret_cast<const char*>(&v), 4);
    };
    auto put_f32 = [&out](double v) {
        float f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), 4);
    };
    out.write("IFSD", 4);
    put_u32(1);  // version
    put_u32(static_cast<std::uint32_t>(model.net.latent_dim));
    put_u32(static_cast<std::uint32_t>(model.net.hidden));
    put_u32(static_cast<std::uint32_t>(model.net.n_hidden));
    put_u32(static_cast<std::uint32_t>(model.net.skip_layer));
    put_u32(static_cast<std::uint32_t>(model.latents.size()));
    for (int l = 0; l < model.net.layer_count(); ++l) {
        const Eigen::MatrixXd& w = model.net.w[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) put_f32(w(r, c));
        for (Eigen::Index r = 0; r < model.net.b[l].size(); ++r)
            put_f32(model.net.b[l](r));
    }
    for (const Eigen::VectorXd& z : model.latents) {
        if (z.size() != model.net.latent_dim)
            throw Error("save_model: latent dimension mismatch");
        for (Eigen::Index i = 0; i < z.size(); ++i) put_f32(z(i));
    }
    if (!out) throw IoError("write failed: " + path);
    out.close();

    if (!manifest_text.empty()) {
        std::ofstream mf(path + ".manifest.txt", std::ios::binary);
        if (!mf) throw IoError("cannot open for writing: " + path + ".manifest.txt");
        mf << manifest_text;
        if (!mf) throw IoError("write failed: " + path + ".manifest.txt");
    }
}

inline TrainedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "IFSD", 4) != 0)
        throw IoError("not a model file (bad magic): " + path);
    auto get_u32 = [&in, &path]() {
        std::uint32_t v;
        in.read(reinterpret_cast<char*>(&v), 4);
        if (!in) throw IoError("truncated model file: " + path);
        return v;
    };
    auto get_f32 = [&in, &path]() {
        float f;
        in.read(reinterpret_cast<char*>(&f), 4);
        if (!in) throw IoError("truncated model file: " + path);
        return static_cast<double>(f);
    };
    const std::uint32_t version = get_u32();
    if (version != 1) throw IoError("unsupported model version: " + path);

    TrainedModel model;
    SdfNetwork& net = model.net;
    net.latent_dim = static_cast<int>(get_u32());
    net.hidden = static_cast<int>(get_u32());
    net.n_hidden = static_cast<int>(get_u32());
    net.skip_layer = static_cast<int>(get_u32());
    const std::uint32_t n_shapes = get_u32();
    if (net.latent_dim < 1 || net.latent_dim > 4096 || net.hidden < 1 ||
        net.hidden > 65536 || net.n_hidden < 2 || net.n_hidden > 256)
        throw IoError("implausible architecture header: " + path);

    for (int l = 0; l < net.layer_count(); ++l) {
        Eigen::MatrixXd w(net.layer_out(l), net.layer_in(l));
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = get_f32();
        Eigen::VectorXd b(net.layer_out(l));
        for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = get_f32();
        net.w.push_back(std::move(w));
        net.b.push_back(std::move(b));
    }
    model.latents.resize(n_shapes);
    for (Eigen::VectorXd& z : model.latents) {
        z.resize(net.latent_dim);
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = get_f32();
    }
    net.validate();
    return model;
}

}  // namespace toothfuse
