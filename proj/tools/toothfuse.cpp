// toothfuse CLI: synthetic data, stagewise tools, one-shot pipeline, and the
// cohort benchmark. Thread count comes from TOOTHFUSE_THREADS.

#include "toothfuse/toothfuse.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace toothfuse;

namespace {

struct Args {
    std::map<std::string, std::string> options;

    static Args parse(int argc, char** argv, int first) {
        Args a;
        for (int i = first; i < argc; ++i) {
            std::string tok = argv[i];
            if (tok.rfind("--", 0) != 0)
                throw Error("unexpected argument '" + tok + "' (options start with --)");
            std::string key = tok.substr(2);
            if (i + 1 < argc && std::string(argv[i + 1]).rfind("--", 0) != 0)
                a.options[key] = argv[++i];
            else
                a.options[key] = "1";
        }
        return a;
    }

    bool has(const std::string& k) const { return options.count(k) != 0; }
    std::string get(const std::string& k, const std::string& fallback = {}) const {
        auto it = options.find(k);
        return it == options.end() ? fallback : it->second;
    }
    std::string require(const std::string& k) const {
        auto it = options.find(k);
        if (it == options.end()) throw Error("missing required option --" + k);
        return it->second;
    }
    double number(const std::string& k, double fallback) const {
        auto it = options.find(k);
        return it == options.end() ? fallback : std::stod(it->second);
    }
    long long integer(const std::string& k, long long fallback) const {
        auto it = options.find(k);
        return it == options.end() ? fallback : std::stoll(it->second);
    }
};

Config load_config(const Args& a) {
    Config c;
    if (a.has("config")) c = Config::load(a.get("config"));
    if (a.has("seed")) c.set("seed", a.get("seed"));
    return c;
}

SyntheticToothSpec synth_spec_from(const Config& c, std::uint64_t seed) {
    SyntheticToothSpec s;
    s.seed = seed;
    s.crown_semi_axes = Vec3(c.get_double("synth.crown.ax", s.crown_semi_axes.x()),
                             c.get_double("synth.crown.ay", s.crown_semi_axes.y()),
                             c.get_double("synth.crown.az", s.crown_semi_axes.z()));
    s.crown_e1 = c.get_double("synth.crown.e1", s.crown_e1);
    s.crown_e2 = c.get_double("synth.crown.e2", s.crown_e2);
    s.n_cusps = static_cast<int>(c.get_int("synth.n_cusps", s.n_cusps));
    s.cusp_amp = c.get_double("synth.cusp_amp", s.cusp_amp);
    s.cusp_sigma = c.get_double("synth.cusp_sigma", s.cusp_sigma);
    s.root_count = static_cast<int>(c.get_int("synth.root_count", s.root_count));
    s.root_length = c.get_double("synth.root_length", s.root_length);
    s.root_base_radius = c.get_double("synth.root_base_radius", s.root_base_radius);
    s.root_taper = c.get_double("synth.root_taper", s.root_taper);
    s.blend_k = c.get_double("synth.blend_k", s.blend_k);
    s.grid_res = static_cast<int>(c.get_int("synth.grid_res", s.grid_res));
    s.gingival_z = c.get_double("synth.gingival_z", s.gingival_z);
    s.decimation_ratio = c.get_double("synth.decimation_ratio", s.decimation_ratio);
    s.noise_sigma = c.get_double("synth.noise_sigma", s.noise_sigma);
    s.max_rotation_deg = c.get_double("synth.max_rotation_deg", s.max_rotation_deg);
    s.max_translation_mm = c.get_double("synth.max_translation_mm", s.max_translation_mm);
    s.jitter = c.get_double("synth.jitter", s.jitter);
    return s;
}

void write_manifest(const std::string& dir, const PipelineConfig& cfg,
                    const std::vector<std::pair<std::string, std::string>>& inputs) {
    std::ofstream out(dir + "/manifest.txt");
    if (!out) throw IoError("cannot open for writing: " + dir + "/manifest.txt");
    for (const auto& [name, hash] : inputs) out << "input." << name << ".fnv1a=" << hash << '\n';
    out << pipeline_config_dump(cfg).to_string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory: " + dir);
}

std::string case_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "case%03d", i);
    return buf;
}

int cmd_synth(const Args& a) {
    Config c = load_config(a);
    PipelineConfig p = pipeline_config_from(c);
    const int count = static_cast<int>(a.integer("count", 1));
    const std::string out_dir = a.require("out-dir");
    for (int i = 0; i < count; ++i) {
        SyntheticToothSpec spec = synth_spec_from(c, p.seed + static_cast<std::uint64_t>(i));
        SyntheticTooth tooth = synth_tooth(spec);
        const std::string dir = count == 1 ? out_dir : out_dir + "/" + case_name(i);
        ensure_dir(dir);
        write_mesh(dir + "/gt.ply", tooth.ground_truth);
        write_mesh(dir + "/crown.ply", tooth.crown);
        write_mesh(dir + "/degraded.ply", tooth.degraded_full);
        write_transform(dir + "/true_T.txt", tooth.true_T);
        std::printf("%s: gt %zu tris, crown %zu tris, degraded %zu tris (seed %llu)\n",
                    dir.c_str(), tooth.ground_truth.triangles.size(),
                    tooth.crown.triangles.size(), tooth.degraded_full.triangles.size(),
                    static_cast<unsigned long long>(spec.seed));
    }
    ensure_dir(out_dir);
    write_manifest(out_dir, pipeline_config_from(c), {});
    return 0;
}

int cmd_register(const Args& a) {
    Config c = load_config(a);
    PipelineConfig p = pipeline_config_from(c);
    const std::string moving_path = a.require("moving");
    const std::string fixed_path = a.require("fixed");
    const std::string out_dir = a.require("out-dir");
    TriMesh moving = read_mesh(moving_path);
    TriMesh fixed = read_mesh(fixed_path);
    MultiscaleParams mp = p.registration;
    mp.ransac.seed = p.seed;
    RegistrationResult r = register_multiscale(moving, fixed, mp);
    ensure_dir(out_dir);
    write_transform(out_dir + "/T.txt", r.transform);
    write_manifest(out_dir, p,
                   {{"moving", hash_file(moving_path)}, {"fixed", hash_file(fixed_path)}});
    std::printf("fitness=%s\n", detail::format_double(r.fitness).c_str());
    std::printf("inlier_rmse=%s\n", detail::format_double(r.inlier_rmse).c_str());
    std::printf("no_correspondences=%d\n", r.no_correspondences ? 1 : 0);
    return 0;
}

int cmd_fuse(const Args& a) {
    Config c = load_config(a);
    PipelineConfig p = pipeline_config_from(c);
    const std::string crown_path = a.require("crown");
    const std::string full_path = a.require("full");
    const std::string t_path = a.require("transform");
    const std::string out_dir = a.require("out-dir");
    TriMesh crown = read_mesh(crown_path);
    TriMesh full = read_mesh(full_path);
    RigidTransform t = read_transform(t_path);
    for (Vec3& v : full.vertices) v = t.apply(v);
    TriMesh root = isolate_root(full, crown, p.fusion);
    TriMesh hybrid = make_hybrid_proxy(crown, root);
    ensure_dir(out_dir);
    write_mesh(out_dir + "/H.ply", hybrid);
    write_manifest(out_dir, p,
                   {{"crown", hash_file(crown_path)},
                    {"full", hash_file(full_path)},
                    {"transform", hash_file(t_path)}});
    std::printf("root_vertices=%zu\nroot_triangles=%zu\n", root.vertices.size(),
                root.triangles.size());
    std::printf("hybrid_vertices=%zu\nhybrid_triangles=%zu\n", hybrid.vertices.size(),
                hybrid.triangles.size());
    return 0;
}

int cmd_train_sdf(const Args& a) {
    Config c = load_config(a);
    PipelineConfig p = pipeline_config_from(c);
    const std::string out_path = a.require("out");
    const SignMode mode =
        a.get("sign-mode", "parity") == "pseudonormal" ? SignMode::pseudonormal
                                                       : SignMode::ray_parity;

    std::vector<std::string> sources;
    std::vector<std::vector<SdfSample>> shapes;
    if (a.has("synthetic")) {
        const int n = static_cast<int>(a.integer("synthetic", 20));
        for (int i = 0; i < n; ++i) {
            SyntheticToothSpec spec = synth_spec_from(c, p.seed + static_cast<std::uint64_t>(i));
            TriMesh gt = synth_tooth(spec).ground_truth;
            auto [norm_mesh, info] = normalize_shape(gt);
            SdfSampleParams sp = p.sampling;
            sp.sign_mode = mode;
            shapes.push_back(
                sample_sdf(norm_mesh, sp, sampling_seed(p.seed + static_cast<std::uint64_t>(i))));
            sources.push_back("synthetic seed " + std::to_string(spec.seed));
            std::printf("sampled synthetic shape %d/%d (%zu samples)\n", i + 1, n,
                        shapes.back().size());
            std::fflush(stdout);
        }
    } else {
        const std::string data_dir = a.require("data-dir");
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(data_dir)) {
            const std::string ext = e.path().extension().string();
            if (ext == ".ply" || ext == ".obj") files.push_back(e.path().string());
        }
        std::sort(files.begin(), files.end());
        if (files.size() < 2) throw Error("train-sdf: need at least 2 meshes in --data-dir");
        for (std::size_t i = 0; i < files.size(); ++i) {
            TriMesh m = read_mesh(files[i]);
            auto [norm_mesh, info] = normalize_shape(m);
            SdfSampleParams sp = p.sampling;
            sp.sign_mode = mode;
            shapes.push_back(sample_sdf(norm_mesh, sp, sampling_seed(p.seed + i)));
            sources.push_back(files[i] + " fnv1a=" + hash_file(files[i]));
            std::printf("sampled %s (%zu samples)\n", files[i].c_str(), shapes.back().size());
            std::fflush(stdout);
        }
    }

    TrainConfig tc = p.train;
    tc.seed = p.seed;
    tc.epoch_callback = [&](int e, const TrainedModel& m) {
        if ((e + 1) % 50 == 0 || e + 1 == tc.epochs) {
            std::printf("epoch %d/%d: loss %s\n", e + 1, tc.epochs,
                        detail::format_double(m.loss_trace.back()).c_str());
            std::fflush(stdout);
        }
    };
    TrainedModel model = train_auto_decoder(shapes, tc);

    std::string manifest = pipeline_config_dump(p).to_string();
    for (std::size_t i = 0; i < sources.size(); ++i)
        manifest += "shape." + std::to_string(i) + "=" + sources[i] + "\n";
    manifest += "final_loss=" + detail::format_double(model.loss_trace.back()) + "\n";
    save_model(out_path, model, manifest);
    std::printf("saved %s (%d shapes, final loss %s)\n", out_path.c_str(),
                static_cast<int>(model.latents.size()),
                detail::format_double(model.loss_trace.back()).c_str());
    return 0;
}

int cmd_refine(const Args& a) {
    Config c = load_config(a);
    PipelineConfig p = pipeline_config_from(c);
    const std::string model_path = a.require("model");
    const std::string mesh_path = a.require("mesh");
    const std::string out_dir = a.require("out-dir");
    TrainedModel model = load_model(model_path);
    TriMesh mesh = read_mesh(mesh_path);

    auto [norm_mesh, info] = normalize_shape(mesh);
    SdfSampleParams sp = p.sampling;
    sp.sign_mode = SignMode::pseudonormal;
    std::vector<SdfSample> samples = sample_sdf(norm_mesh, sp, sampling_seed(p.seed));
    FitConfig fc = p.fit;
    fc.seed = fitting_seed(p.seed);
    FitResult fit = optimize_latent(model.net, model.mean_latent(), samples, fc);

    ensure_dir(out_dir);
    write_latent(out_dir + "/z_star.bin", fit.z);
    write_norm_info(out_dir + "/norm.txt", info);
    write_manifest(out_dir, p,
                   {{"model", hash_file(model_path)}, {"mesh", hash_file(mesh_path)}});
    std::printf("fit.initial_loss=%s\n", detail::format_double(fit.loss_trace.front()).c_str());
    std::printf("fit.best_loss=%s\n", detail::format_double(fit.best_loss).c_str());
    return 0;
}

int cmd_extract(const Args& a) {
    Config c = load_config(a);
    PipelineConfig p = pipeline_config_from(c);
    const std::string model_path = a.require("model");
    const std::string out_path = a.require("out");
    TrainedModel model = load_model(model_path);

    Eigen::VectorXd z;
    if (a.has("latent")) {
        z = read_latent(a.get("latent"));
    } else if (a.has("latent-index")) {
        const std::size_t k = static_cast<std::size_t>(a.integer("latent-index", 0));
        if (k >= model.latents.size()) throw Error("extract: latent index out of range");
        z = model.latents[k];
    } else {
        throw Error("extract: need --latent FILE or --latent-index K");
    }
    NormalizationInfo info;
    if (a.has("norm")) info = read_norm_info(a.get("norm"));
    const int res = static_cast<int>(a.integer("res", p.grid_res));

    TriMesh s = reconstruct(model.net, z, info, res);
    write_mesh(out_path, s);
    std::printf("vertices=%zu\ntriangles=%zu\n", s.vertices.size(), s.triangles.size());
    return 0;
}

int cmd_evaluate(const Args& a) {
    Config c = load_config(a);
    PipelineConfig p = pipeline_config_from(c);
    TriMesh reference = read_mesh(a.require("reference"));
    TriMesh recon = read_mesh(a.require("recon"));
    const std::size_t n =
        static_cast<std::size_t>(a.integer("samples", static_cast<long long>(p.metric_samples)));
    MetricReport r = compute_metrics(reference, recon, n, metric_seed(p.seed));
    std::string text;
    text += "cd_l1_one_sided=" + detail::format_double(r.cd_l1_one_sided) + "\n";
    text += "hd95_one_sided=" + detail::format_double(r.hd95_one_sided) + "\n";
    text += "scale_ratio=" + detail::format_double(r.scale_ratio) + "\n";
    text += "samples=" + std::to_string(r.sample_count) + "\n";
    text += "seed=" + std::to_string(r.seed) + "\n";
    std::fputs(text.c_str(), stdout);
    if (a.has("out")) {
        std::ofstream out(a.get("out"));
        if (!out) throw IoError("cannot open for writing: " + a.get("out"));
        out << text;
    }
    return 0;
}

int cmd_errormap(const Args& a) {
    Config c = load_config(a);
    PipelineConfig p = pipeline_config_from(c);
    TriMesh reference = read_mesh(a.require("reference"));
    TriMesh recon = read_mesh(a.require("recon"));
    const double d_max = a.number("dmax", p.errormap_d_max);
    TriMesh colored = error_colormap(reference, recon, d_max);
    write_mesh(a.require("out"), colored);
    std::printf("vertices=%zu\nd_max=%s\n", colored.vertices.size(),
                detail::format_double(d_max).c_str());
    return 0;
}

void print_pipeline_summary(const PipelineResult& r) {
    std::fputs(report_text(r).c_str(), stdout);
}

int cmd_pipeline(const Args& a) {
    Config c = load_config(a);
    PipelineConfig p = pipeline_config_from(c);
    const std::string crown_path = a.require("crown");
    const std::string full_path = a.require("full");
    const std::string model_path = a.require("model");
    const std::string out_dir = a.require("out-dir");
    TriMesh crown = read_mesh(crown_path);
    TriMesh full = read_mesh(full_path);
    TrainedModel model = load_model(model_path);
    TriMesh gt;
    const bool has_gt = a.has("gt");
    if (has_gt) gt = read_mesh(a.get("gt"));

    PipelineResult r = run_pipeline(crown, full, model, p, has_gt ? &gt : nullptr);
    std::vector<std::pair<std::string, std::string>> hashes = {
        {"crown", hash_file(crown_path)},
        {"full", hash_file(full_path)},
        {"model", hash_file(model_path)}};
    if (has_gt) hashes.emplace_back("gt", hash_file(a.get("gt")));
    write_run_dir(out_dir, r, p, hashes);
    print_pipeline_summary(r);
    return 0;
}

struct Stat {
    std::vector<double> v;
    void add(double x) { v.push_back(x); }
    double mean() const {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    }
    double stddev() const {
        if (v.size() < 2) return 0.0;
        const double m = mean();
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return std::sqrt(s / static_cast<double>(v.size() - 1));
    }
};

int cmd_bench(const Args& a) {
    Config c = load_config(a);
    PipelineConfig p = pipeline_config_from(c);
    const std::string model_path = a.require("model");
    const std::string out_dir = a.require("out-dir");
    const int count = static_cast<int>(a.integer("count", 10));
    const std::uint64_t first_seed =
        static_cast<std::uint64_t>(a.integer("first-seed", c.get_int("bench.first_seed", 1000)));
    TrainedModel model = load_model(model_path);
    ensure_dir(out_dir);

    Stat fused_cd, fused_hd, fused_scale, fused_crown;
    Stat cbct_cd, cbct_hd, cbct_scale, cbct_crown;
    int fused_wins = 0;
    std::string lines;
    for (int i = 0; i < count; ++i) {
        const std::uint64_t case_seed = first_seed + static_cast<std::uint64_t>(i);
        SyntheticToothSpec spec = synth_spec_from(c, case_seed);
        SyntheticTooth tooth = synth_tooth(spec);
        PipelineConfig pc = p;
        pc.seed = case_seed;

        PipelineResult fused =
            run_pipeline(tooth.crown, tooth.degraded_full, model, pc, &tooth.ground_truth);
        write_run_dir(out_dir + "/" + case_name(i) + "_fused", fused, pc, {});

        // the direct baseline gets the oracle alignment so the comparison
        // isolates surface quality from pose error
        TriMesh aligned = tooth.degraded_full;
        for (Vec3& v : aligned.vertices) v = tooth.true_T.apply(v);
        PipelineResult cbct = run_cbct_only(aligned, model, pc, &tooth.ground_truth);
        write_run_dir(out_dir + "/" + case_name(i) + "_cbct", cbct, pc, {});

        const double f_crown = chamfer_l1(one_sided_distances(
            tooth.crown, fused.surface, pc.metric_samples, metric_seed(pc.seed)));
        const double c_crown = chamfer_l1(one_sided_distances(
            tooth.crown, cbct.surface, pc.metric_samples, metric_seed(pc.seed)));
        fused_cd.add(fused.vs_ground_truth.cd_l1_one_sided);
        fused_hd.add(fused.vs_ground_truth.hd95_one_sided);
        fused_scale.add(fused.vs_ground_truth.scale_ratio);
        fused_crown.add(f_crown);
        cbct_cd.add(cbct.vs_ground_truth.cd_l1_one_sided);
        cbct_hd.add(cbct.vs_ground_truth.hd95_one_sided);
        cbct_scale.add(cbct.vs_ground_truth.scale_ratio);
        cbct_crown.add(c_crown);
        if (f_crown < c_crown) ++fused_wins;

        lines += case_name(i) + ".fused.crown_cd=" + detail::format_double(f_crown) + "\n";
        lines += case_name(i) + ".cbct.crown_cd=" + detail::format_double(c_crown) + "\n";
        std::printf("%s: crown CD fused %s vs cbct %s\n", case_name(i).c_str(),
                    detail::format_double(f_crown).c_str(),
                    detail::format_double(c_crown).c_str());
        std::fflush(stdout);
    }

    auto fmt_ms = [](const Stat& s) {
        return detail::format_double(s.mean()) + " +- " + detail::format_double(s.stddev());
    };
    std::string summary;
    summary += "cases=" + std::to_string(count) + "\n";
    summary += "fused.crown_cd=" + fmt_ms(fused_crown) + "\n";
    summary += "cbct.crown_cd=" + fmt_ms(cbct_crown) + "\n";
    summary += "fused.cd_l1=" + fmt_ms(fused_cd) + "\n";
    summary += "cbct.cd_l1=" + fmt_ms(cbct_cd) + "\n";
    summary += "fused.hd95=" + fmt_ms(fused_hd) + "\n";
    summary += "cbct.hd95=" + fmt_ms(cbct_hd) + "\n";
    summary += "fused.scale_ratio=" + fmt_ms(fused_scale) + "\n";
    summary += "cbct.scale_ratio=" + fmt_ms(cbct_scale) + "\n";
    summary += "fused_crown_wins=" + std::to_string(fused_wins) + "/" + std::to_string(count) + "\n";
    summary += lines;
    {
        std::ofstream out(out_dir + "/summary.txt");
        if (!out) throw IoError("cannot open for writing: " + out_dir + "/summary.txt");
        out << summary;
    }
    write_manifest(out_dir, p, {{"model", hash_file(model_path)}});
    std::fputs(summary.c_str(), stdout);
    return 0;
}

void usage() {
    std::fputs(
        "usage: toothfuse <subcommand> [options]\n"
        "\n"
        "subcommands:\n"
        "  synth     --out-dir D [--count N] [--seed S] [--config F]\n"
        "  register  --moving M.ply --fixed F.ply --out-dir D\n"
        "  fuse      --crown C.ply --full R.ply --transform T.txt --out-dir D\n"
        "  train-sdf --out model.ifsd (--synthetic N | --data-dir D) [--sign-mode parity|pseudonormal]\n"
        "  refine    --model model.ifsd --mesh H.ply --out-dir D\n"
        "  extract   --model model.ifsd (--latent z.bin | --latent-index K) [--norm norm.txt]\n"
        "            [--res N] --out S.ply\n"
        "  evaluate  --reference A.ply --recon B.ply [--samples N] [--out report.txt]\n"
        "  errormap  --reference A.ply --recon B.ply [--dmax MM] --out colored.ply\n"
        "  pipeline  --crown C.ply --full R.ply --model model.ifsd --out-dir D [--gt GT.ply]\n"
        "  bench     --model model.ifsd --out-dir D [--count N] [--first-seed S]\n"
        "\n"
        "common options: --seed S, --config FILE, --out-dir DIR\n"
        "environment: TOOTHFUSE_THREADS limits worker threads\n",
        stderr);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        usage();
        return 2;
    }
    const std::string cmd = argv[1];
    try {
        Args a = Args::parse(argc, argv, 2);
        if (cmd == "synth") return cmd_synth(a);
        if (cmd == "register") return cmd_register(a);
        if (cmd == "fuse") return cmd_fuse(a);
        if (cmd == "train-sdf") return cmd_train_sdf(a);
        if (cmd == "refine") return cmd_refine(a);
        if (cmd == "extract") return cmd_extract(a);
        if (cmd == "evaluate") return cmd_evaluate(a);
        if (cmd == "errormap") return cmd_errormap(a);
        if (cmd == "pipeline") return cmd_pipeline(a);
        if (cmd == "bench") return cmd_bench(a);
        usage();
        std::fprintf(stderr, "error: unknown subcommand '%s'\n", cmd.c_str());
        return 2;
    } catch (const StageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
