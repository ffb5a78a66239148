#pragma once

#include "toothfuse/config.hpp"
#include "toothfuse/extraction.hpp"
#include "toothfuse/fusion.hpp"
#include "toothfuse/io.hpp"
#include "toothfuse/metrics.hpp"
#include "toothfuse/registration.hpp"
#include "toothfuse/sdf_network.hpp"

#include <filesystem>
#include <functional>

namespace toothfuse {

struct PipelineConfig {
    MultiscaleParams registration;
    FusionParams fusion;
    TrainConfig train;
    FitConfig fit;
    SdfSampleParams sampling;
    int grid_res = 192;
    std::size_t metric_samples = 100000;
    double errormap_d_max = 0.3;  // mm
    std::uint64_t seed = 0;
};

namespace detail {

inline std::string format_u64(std::uint64_t v) { return std::to_string(v); }

inline std::string format_int(long long v) { return std::to_string(v); }

inline std::string format_num(double v) {
    return format_double(v);
}

}  // namespace detail

// Applies recognized keys from a parsed config over the defaults. Unknown
// keys are left alone so one file can drive several subcommands.
inline PipelineConfig pipeline_config_from(const Config& c) {
    PipelineConfig p;
    p.seed = c.get_u64("seed", p.seed);

    auto& mp = p.registration;
    mp.sample_count = static_cast<int>(c.get_int("registration.sample_count", mp.sample_count));
    mp.normal_k = static_cast<int>(c.get_int("registration.normal_k", mp.normal_k));
    mp.feature_radius_factor =
        c.get_double("registration.feature_radius_factor", mp.feature_radius_factor);
    mp.ransac.max_iterations =
        static_cast<int>(c.get_int("ransac.max_iterations", mp.ransac.max_iterations));
    mp.ransac.distance_threshold =
        c.get_double("ransac.distance_threshold", mp.ransac.distance_threshold);
    mp.ransac.edge_similarity = c.get_double("ransac.edge_similarity", mp.ransac.edge_similarity);
    mp.ransac.early_exit_fitness =
        c.get_double("ransac.early_exit_fitness", mp.ransac.early_exit_fitness);
    const int levels = static_cast<int>(c.get_int("icp.levels",
                                                  static_cast<long long>(mp.schedule.size())));
    if (levels < 1) throw ConfigError("icp.levels must be >= 1");
    std::vector<IcpScheduleLevel> schedule;
    for (int l = 0; l < levels; ++l) {
        const std::string pre = "icp.level" + std::to_string(l) + ".";
        IcpScheduleLevel def =
            l < static_cast<int>(mp.schedule.size()) ? mp.schedule[l] : mp.schedule.back();
        def.voxel = c.get_double(pre + "voxel", def.voxel);
        def.max_dist = c.get_double(pre + "max_dist", def.max_dist);
        def.max_iterations = static_cast<int>(c.get_int(pre + "max_iterations", def.max_iterations));
        schedule.push_back(def);
    }
    mp.schedule = std::move(schedule);

    p.fusion.tau = c.get_double("fusion.tau", p.fusion.tau);

    p.sampling.n_surface = static_cast<std::size_t>(
        c.get_int("sampling.n_surface", static_cast<long long>(p.sampling.n_surface)));
    p.sampling.n_free = static_cast<std::size_t>(
        c.get_int("sampling.n_free", static_cast<long long>(p.sampling.n_free)));
    p.sampling.sigma1 = c.get_double("sampling.sigma1", p.sampling.sigma1);
    p.sampling.sigma2 = c.get_double("sampling.sigma2", p.sampling.sigma2);

    auto& t = p.train;
    t.latent_dim = static_cast<int>(c.get_int("train.latent_dim", t.latent_dim));
    t.hidden = static_cast<int>(c.get_int("train.hidden", t.hidden));
    t.n_hidden = static_cast<int>(c.get_int("train.n_hidden", t.n_hidden));
    t.skip_layer = static_cast<int>(c.get_int("train.skip_layer", t.skip_layer));
    t.epochs = static_cast<int>(c.get_int("train.epochs", t.epochs));
    t.batch_size = static_cast<int>(c.get_int("train.batch_size", t.batch_size));
    t.lr = c.get_double("train.lr", t.lr);
    t.lr_decay = c.get_double("train.lr_decay", t.lr_decay);
    t.lr_decay_every = static_cast<int>(c.get_int("train.lr_decay_every", t.lr_decay_every));
    t.delta = c.get_double("train.delta", t.delta);
    t.lambda = c.get_double("train.lambda", t.lambda);
    t.latent_init_sigma = c.get_double("train.latent_init_sigma", t.latent_init_sigma);
    t.seed = p.seed;

    auto& f = p.fit;
    f.iterations = static_cast<int>(c.get_int("fit.iterations", f.iterations));
    f.batch_size = static_cast<int>(c.get_int("fit.batch_size", f.batch_size));
    f.eval_every = static_cast<int>(c.get_int("fit.eval_every", f.eval_every));
    f.lr = c.get_double("fit.lr", f.lr);
    f.delta = c.get_double("fit.delta", f.delta);
    f.lambda = c.get_double("fit.lambda", f.lambda);
    f.seed = p.seed;

    p.grid_res = static_cast<int>(c.get_int("grid.res", p.grid_res));
    p.metric_samples = static_cast<std::size_t>(
        c.get_int("metrics.samples", static_cast<long long>(p.metric_samples)));
    p.errormap_d_max = c.get_double("metrics.d_max", p.errormap_d_max);
    return p;
}

// Canonical dump of the effective configuration, for manifests.
inline Config pipeline_config_dump(const PipelineConfig& p) {
    Config c;
    c.set("seed", detail::format_u64(p.seed));
    c.set("registration.sample_count", detail::format_int(p.registration.sample_count));
    c.set("registration.normal_k", detail::format_int(p.registration.normal_k));
    c.set("registration.feature_radius_factor",
          detail::format_num(p.registration.feature_radius_factor));
    c.set("ransac.max_iterations", detail::format_int(p.registration.ransac.max_iterations));
    c.set("ransac.distance_threshold", detail::format_num(p.registration.ransac.distance_threshold));
    c.set("ransac.edge_similarity", detail::format_num(p.registration.ransac.edge_similarity));
    c.set("ransac.early_exit_fitness", detail::format_num(p.registration.ransac.early_exit_fitness));
    c.set("icp.levels", detail::format_int(static_cast<long long>(p.registration.schedule.size())));
    for (std::size_t l = 0; l < p.registration.schedule.size(); ++l) {
        const std::string pre = "icp.level" + std::to_string(l) + ".";
        c.set(pre + "voxel", detail::format_num(p.registration.schedule[l].voxel));
        c.set(pre + "max_dist", detail::format_num(p.registration.schedule[l].max_dist));
        c.set(pre + "max_iterations", detail::format_int(p.registration.schedule[l].max_iterations));
    }
    c.set("fusion.tau", detail::format_num(p.fusion.tau));
    c.set("sampling.n_surface", detail::format_u64(p.sampling.n_surface));
    c.set("sampling.n_free", detail::format_u64(p.sampling.n_free));
    c.set("sampling.sigma1", detail::format_num(p.sampling.sigma1));
    c.set("sampling.sigma2", detail::format_num(p.sampling.sigma2));
    c.set("train.latent_dim", detail::format_int(p.train.latent_dim));
    c.set("train.hidden", detail::format_int(p.train.hidden));
    c.set("train.n_hidden", detail::format_int(p.train.n_hidden));
    c.set("train.skip_layer", detail::format_int(p.train.skip_layer));
    c.set("train.epochs", detail::format_int(p.train.epochs));
    c.set("train.batch_size", detail::format_int(p.train.batch_size));
    c.set("train.lr", detail::format_num(p.train.lr));
    c.set("train.lr_decay", detail::format_num(p.train.lr_decay));
    c.set("train.lr_decay_every", detail::format_int(p.train.lr_decay_every));
    c.set("train.delta", detail::format_num(p.train.delta));
    c.set("train.lambda", detail::format_num(p.train.lambda));
    c.set("train.latent_init_sigma", detail::format_num(p.train.latent_init_sigma));
    c.set("fit.iterations", detail::format_int(p.fit.iterations));
    c.set("fit.batch_size", detail::format_int(p.fit.batch_size));
    c.set("fit.eval_every", detail::format_int(p.fit.eval_every));
    c.set("fit.lr", detail::format_num(p.fit.lr));
    c.set("fit.delta", detail::format_num(p.fit.delta));
    c.set("fit.lambda", detail::format_num(p.fit.lambda));
    c.set("grid.res", detail::format_int(p.grid_res));
    c.set("metrics.samples", detail::format_u64(p.metric_samples));
    c.set("metrics.d_max", detail::format_num(p.errormap_d_max));
    return c;
}

// Stage seeds derived from the master seed; standalone subcommands use the
// same derivations so stagewise runs reproduce the one-shot pipeline.
inline std::uint64_t sampling_seed(std::uint64_t seed) { return seed ^ 0x73776d706c650a01ull; }
inline std::uint64_t fitting_seed(std::uint64_t seed) { return seed ^ 0x666974740a020202ull; }
inline std::uint64_t metric_seed(std::uint64_t seed) { return seed ^ 0x6d65747269630a03ull; }

struct FusionStats {
    std::size_t root_vertices = 0;
    std::size_t root_triangles = 0;
    std::size_t hybrid_vertices = 0;
    std::size_t hybrid_triangles = 0;
};

struct PipelineResult {
    TriMesh surface;  // S, in mm, in the crown frame
    TriMesh hybrid;   // H (for the direct baseline: the input mesh itself)
    RegistrationResult registration;
    FusionStats fusion;
    NormalizationInfo norm;
    FitResult fit;
    MetricReport vs_hybrid;
    bool has_ground_truth = false;
    MetricReport vs_ground_truth;
};

namespace detail {

template <typename Fn>
auto run_stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

// Shared tail of both pipelines: normalize the target, sample it, fit the
// latent, extract, and measure.
inline PipelineResult fit_and_extract(TriMesh target, const TrainedModel& model,
                                      const PipelineConfig& cfg) {
    PipelineResult res;
    res.hybrid = std::move(target);

    TriMesh target_norm;
    res.norm = run_stage("normalization", [&] {
        auto [mesh, info] = normalize_shape(res.hybrid);
        target_norm = std::move(mesh);
        return info;
    });

    std::vector<SdfSample> samples = run_stage("sampling", [&] {
        SdfSampleParams sp = cfg.sampling;
        sp.sign_mode = SignMode::pseudonormal;
        return sample_sdf(target_norm, sp, sampling_seed(cfg.seed));
    });

    res.fit = run_stage("fitting", [&] {
        FitConfig fc = cfg.fit;
        fc.seed = fitting_seed(cfg.seed);
        return optimize_latent(model.net, model.mean_latent(), samples, fc);
    });

    res.surface = run_stage("extraction", [&] {
        return reconstruct(model.net, res.fit.z, res.norm, cfg.grid_res);
    });

    res.vs_hybrid = run_stage("metrics", [&] {
        return compute_metrics(res.hybrid, res.surface, cfg.metric_samples,
                               metric_seed(cfg.seed));
    });
    return res;
}

}  // namespace detail

// Full fusion pipeline: align R onto C, isolate the root, build the hybrid
// proxy, project it onto the shape prior, extract S (crown frame, mm).
inline PipelineResult run_pipeline(const TriMesh& crown, const TriMesh& full,
                                   const TrainedModel& model, const PipelineConfig& cfg,
                                   const TriMesh* ground_truth = nullptr) {
    RegistrationResult reg = detail::run_stage("registration", [&] {
        MultiscaleParams mp = cfg.registration;
        mp.ransac.seed = cfg.seed;
        return register_multiscale(full, crown, mp);
    });

    TriMesh hybrid;
    FusionStats stats;
    detail::run_stage("fusion", [&] {
        TriMesh aligned = full;
        for (Vec3& v : aligned.vertices) v = reg.transform.apply(v);
        TriMesh root = isolate_root(aligned, crown, cfg.fusion);
        stats.root_vertices = root.vertices.size();
        stats.root_triangles = root.triangles.size();
        hybrid = make_hybrid_proxy(crown, root);
        stats.hybrid_vertices = hybrid.vertices.size();
        stats.hybrid_triangles = hybrid.triangles.size();
        return 0;
    });

    PipelineResult res = detail::fit_and_extract(std::move(hybrid), model, cfg);
    res.registration = std::move(reg);
    res.fusion = stats;
    if (ground_truth) {
        res.has_ground_truth = true;
        res.vs_ground_truth = detail::run_stage("metrics", [&] {
            return compute_metrics(*ground_truth, res.surface, cfg.metric_samples,
                                   metric_seed(cfg.seed));
        });
    }
    return res;
}

// Baseline: no registration or fusion, the prior is fitted to the full mesh
// as-is (the direct-regularization comparison).
inline PipelineResult run_cbct_only(const TriMesh& full, const TrainedModel& model,
                                    const PipelineConfig& cfg,
                                    const TriMesh* ground_truth = nullptr) {
    PipelineResult res = detail::fit_and_extract(full, model, cfg);
    if (ground_truth) {
        res.has_ground_truth = true;
        res.vs_ground_truth = detail::run_stage("metrics", [&] {
            return compute_metrics(*ground_truth, res.surface, cfg.metric_samples,
                                   metric_seed(cfg.seed));
        });
    }
    return res;
}

// ---------------------------------------------------------------------------
// Run-directory artifacts

namespace detail {

inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex_u64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace detail

inline std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for hashing: " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[65536];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        h = detail::fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
    return detail::hex_u64(h);
}

inline void write_transform(const std::string& path, const RigidTransform& t) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    const Mat4 m = t.matrix();
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            if (c) out << ' ';
            out << detail::format_double(m(r, c));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

inline RigidTransform read_transform(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    Mat4 m;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            if (!(in >> m(r, c))) throw IoError("malformed transform file: " + path);
    return RigidTransform::from_matrix(m);
}

// z_star.bin: u32 dimension then little-endian f64 components.
inline void write_latent(const std::string& path, const Eigen::VectorXd& z) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    const std::uint32_t dim = static_cast<std::uint32_t>(z.size());
    out.write(reinterpret_cast<const char*>(&dim), 4);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double v = z(i);
        out.write(reinterpret_cast<const char*>(&v), 8);
    }
    if (!out) throw IoError("write failed: " + path);
}

inline Eigen::VectorXd read_latent(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::uint32_t dim = 0;
    in.read(reinterpret_cast<char*>(&dim), 4);
    if (!in || dim == 0 || dim > 65536) throw IoError("malformed latent file: " + path);
    Eigen::VectorXd z(dim);
    for (std::uint32_t i = 0; i < dim; ++i) {
        double v = 0.0;
        in.read(reinterpret_cast<char*>(&v), 8);
        if (!in) throw IoError("malformed latent file: " + path);
        z(i) = v;
    }
    return z;
}

inline void write_norm_info(const std::string& path, const NormalizationInfo& info) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "center.x=" << detail::format_double(info.center.x()) << '\n'
        << "center.y=" << detail::format_double(info.center.y()) << '\n'
        << "center.z=" << detail::format_double(info.center.z()) << '\n'
        << "scale=" << detail::format_double(info.scale) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

inline NormalizationInfo read_norm_info(const std::string& path) {
    Config c = Config::load(path);
    NormalizationInfo info;
    info.center = Vec3(c.get_double("center.x", 0.0), c.get_double("center.y", 0.0),
                       c.get_double("center.z", 0.0));
    info.scale = c.get_double("scale", 1.0);
    if (!(info.scale > 0.0)) throw IoError("malformed normalization file: " + path);
    return info;
}

inline std::string report_text(const PipelineResult& r) {
    std::string s;
    auto kv = [&s](const std::string& k, const std::string& v) {
        s += k;
        s += '=';
        s += v;
        s += '\n';
    };
    kv("registration.fitness", detail::format_double(r.registration.fitness));
    kv("registration.inlier_rmse", detail::format_double(r.registration.inlier_rmse));
    kv("registration.no_correspondences", r.registration.no_correspondences ? "1" : "0");
    kv("fusion.root_vertices", std::to_string(r.fusion.root_vertices));
    kv("fusion.root_triangles", std::to_string(r.fusion.root_triangles));
    kv("fusion.hybrid_vertices", std::to_string(r.fusion.hybrid_vertices));
    kv("fusion.hybrid_triangles", std::to_string(r.fusion.hybrid_triangles));
    kv("norm.center.x", detail::format_double(r.norm.center.x()));
    kv("norm.center.y", detail::format_double(r.norm.center.y()));
    kv("norm.center.z", detail::format_double(r.norm.center.z()));
    kv("norm.scale", detail::format_double(r.norm.scale));
    kv("fit.best_loss", detail::format_double(r.fit.best_loss));
    kv("fit.checkpoints", std::to_string(r.fit.loss_trace.size()));
    if (!r.fit.loss_trace.empty()) {
        kv("fit.initial_loss", detail::format_double(r.fit.loss_trace.front()));
        kv("fit.final_loss", detail::format_double(r.fit.loss_trace.back()));
    }
    kv("metrics.vs_hybrid.cd_l1", detail::format_double(r.vs_hybrid.cd_l1_one_sided));
    kv("metrics.vs_hybrid.hd95", detail::format_double(r.vs_hybrid.hd95_one_sided));
    kv("metrics.vs_hybrid.scale_ratio", detail::format_double(r.vs_hybrid.scale_ratio));
    kv("metrics.vs_hybrid.samples", std::to_string(r.vs_hybrid.sample_count));
    if (r.has_ground_truth) {
        kv("metrics.vs_gt.cd_l1", detail::format_double(r.vs_ground_truth.cd_l1_one_sided));
        kv("metrics.vs_gt.hd95", detail::format_double(r.vs_ground_truth.hd95_one_sided));
        kv("metrics.vs_gt.scale_ratio", detail::format_double(r.vs_ground_truth.scale_ratio));
    }
    kv("surface.vertices", std::to_string(r.surface.vertices.size()));
    kv("surface.triangles", std::to_string(r.surface.triangles.size()));
    return s;
}

// Writes the fixed artifact set: T.txt, H.ply, z_star.bin, S.ply,
// report.txt, manifest.txt, plus norm.txt so stages can be re-run
// individually. `input_hashes` lists name=hash lines for the manifest.
inline void write_run_dir(const std::string& dir, const PipelineResult& r,
                          const PipelineConfig& cfg,
                          const std::vector<std::pair<std::string, std::string>>& input_hashes) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create run directory: " + dir);
    const std::string base = dir + "/";
    write_transform(base + "T.txt", r.registration.transform);
    write_mesh(base + "H.ply", r.hybrid);
    write_latent(base + "z_star.bin", r.fit.z);
    write_mesh(base + "S.ply", r.surface);
    write_norm_info(base + "norm.txt", r.norm);
    {
        std::ofstream out(base + "report.txt");
        if (!out) throw IoError("cannot open for writing: " + base + "report.txt");
        out << report_text(r);
    }
    {
        std::ofstream out(base + "manifest.txt");
        if (!out) throw IoError("cannot open for writing: " + base + "manifest.txt");
        for (const auto& [name, hash] : input_hashes)
            out << "input." << name << ".fnv1a=" << hash << '\n';
        out << pipeline_config_dump(cfg).to_string();
    }
}

}  // namespace toothfuse
