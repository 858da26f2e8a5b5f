#pragma once

#include <json.hpp>

#include "morphkit/losses.hpp"
#include "morphkit/morphflow.hpp"

namespace morphkit {

struct TrainConfig {
    int iterations = 800;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    LossWeights weights;
    int geodesic_samples = 500;
    int knn_k = 8;
    double sigma = 10.0;
    int hidden_width = 128;
    int feature_dim = 64;
    int timestep_draws = 4;
    double arap_dt = 0.05;
    double smooth_eps = 1e-4;
    uint64_t seed = 0;
    int checkpoint_interval = 100;
    Vec3 sh_view{0, 0, 1};  // canonical view direction for SH colors

    void validate() const {
        if (iterations < 1 || iterations > 1000000)
            throw config_error(cat("iterations must be in [1, 1000000], got ", iterations));
        for (double v : {learning_rate, adam_beta1, adam_beta2, adam_eps, sigma, arap_dt, smooth_eps})
            if (!std::isfinite(v)) throw config_error("train config has a non-finite numeric field");
        weights.validate();
        if (geodesic_samples < 1) throw config_error("geodesic_samples must be >= 1");
        if (knn_k < 1) throw config_error("knn_k must be >= 1");
        if (hidden_width < 1 || feature_dim < 1) throw config_error("network widths must be >= 1");
        if (timestep_draws < 0) throw config_error("timestep_draws must be >= 0");
        if (!(arap_dt > 0 && arap_dt < 1)) throw config_error("arap_dt must be in (0,1)");
        if (checkpoint_interval < 1) throw config_error("checkpoint_interval must be >= 1");
    }
};

/// A mesh prepared for training: normalized, colored, with its transform and
/// optionally bound Gaussians.
struct MorphObject {
    Mesh mesh;
    NormalizeTransform tf;
    GaussianSet gaussians;
    bool has_gaussians = false;
};

/// Normalize and color an object. Colors come from bound Gaussians when a
/// splat set is given, otherwise from the mesh's own vertex colors.
inline MorphObject prepare_object(Mesh mesh, const GaussianSet* gaussians, const Vec3& sh_view, int knn_k) {
    MorphObject obj;
    obj.mesh = std::move(mesh);
    obj.tf = normalize_mesh(obj.mesh);
    if (gaussians) {
        obj.gaussians = *gaussians;
        obj.has_gaussians = true;
        bind_gaussians(obj.gaussians, obj.mesh, obj.tf);
        HybridGraph graph = build_hybrid_graph(obj.mesh, knn_k);
        init_vertex_colors(obj.mesh, obj.gaussians, sh_view, graph);
    } else if (!obj.mesh.has_colors()) {
        throw numeric_error("prepare_object: no color source (mesh has no vertex colors and no gaussians)");
    }
    return obj;
}

// ---------------------------------------------------------- geodesic cache

/// Geodesic tables are pure functions of (mesh geometry, k, sample count);
/// cache files are keyed by that content hash.
inline GeodesicTable geodesic_table_cached(const Mesh& mesh, const HybridGraph& graph, int samples,
                                           const std::string& cache_dir) {
    std::vector<int> ids = farthest_point_sample(mesh, std::min(samples, int(mesh.vertices.size())));
    if (cache_dir.empty()) return geodesic_table(graph, ids);

    uint64_t key = mesh_content_hash(mesh);
    for (const auto& e : graph.edges) {
        key = fnv1a64(&e.u, sizeof e.u, key);
        key = fnv1a64(&e.v, sizeof e.v, key);
        key = fnv1a64(&e.w, sizeof e.w, key);
    }
    std::string tag = cat(";samples=", samples);
    key = fnv1a64(tag.data(), tag.size(), key);
    std::string path = cache_dir + "/geo_" + hex64(key) + ".mktn";

    if (std::ifstream(path).good()) {
        auto tensors = load_tensors(path);
        GeodesicTable t;
        for (auto& [name, m] : tensors) {
            if (name == "sample_ids") {
                t.sample_ids.resize(m.data.size());
                for (size_t i = 0; i < m.data.size(); ++i) t.sample_ids[i] = int(m.data[i]);
            } else if (name == "dist") {
                t.dist = std::move(m.data);
            }
        }
        if (t.sample_ids.size() * t.sample_ids.size() == t.dist.size() && t.sample_ids == ids) return t;
        warn(cat("geodesic cache ", path, " is stale, recomputing"));
    }
    GeodesicTable t = geodesic_table(graph, ids);
    Matrix idm(1, t.size());
    for (int i = 0; i < t.size(); ++i) idm.data[size_t(i)] = double(t.sample_ids[size_t(i)]);
    Matrix dm(t.size(), t.size());
    dm.data = t.dist;
    std::error_code ec;
    std::filesystem::create_directories(cache_dir, ec);
    save_tensors(path, {{"sample_ids", idm}, {"dist", dm}});
    return t;
}

// ----------------------------------------------------------------- trainer

/// Joint optimization of the feature network (through the assignment matrix)
/// and the morphing flow under the weighted loss. One Adam store drives both
/// networks. All randomness flows through a single serialized SplitMix64
/// stream: per iteration, `timestep_draws` rigidity times then one color
/// time, in that order.
class Trainer {
public:
    Trainer(MorphObject source, MorphObject target, TrainConfig cfg, std::string cache_dir = {})
        : src_(std::move(source)), tgt_(std::move(target)), cfg_(std::move(cfg)), rng_(cfg_.seed) {
        cfg_.validate();
        if (!src_.mesh.has_colors() || !tgt_.mesh.has_colors())
            throw numeric_error("trainer: both objects must be colored");

        feat_cfg_ = FeatureNetConfig{cfg_.hidden_width, cfg_.feature_dim, cfg_.sigma};
        agg_src_ = MeshAggregation::build(src_.mesh);
        agg_tgt_ = MeshAggregation::build(tgt_.mesh);

        graph_src_ = build_hybrid_graph(src_.mesh, cfg_.knn_k);
        graph_tgt_ = build_hybrid_graph(tgt_.mesh, cfg_.knn_k);
        table_src_ = geodesic_table_cached(src_.mesh, graph_src_, cfg_.geodesic_samples, cache_dir);
        table_tgt_ = geodesic_table_cached(tgt_.mesh, graph_tgt_, cfg_.geodesic_samples, cache_dir);
        geo_data_ = GeodesicLossData::build(table_src_, table_tgt_);

        arap_topo_ = ArapTopology::build(src_.mesh);
        smooth_topo_ = SmoothTopology::build(src_.mesh, cfg_.smooth_eps);

        v_src_ = to_matrix(src_.mesh.vertices);
        v_tgt_ = to_matrix(tgt_.mesh.vertices);
        c_src_ = to_matrix(src_.mesh.colors);
        c_tgt_ = to_matrix(tgt_.mesh.colors);

        init_feature_net(store_, feat_cfg_, rng_);
        init_flow_net(store_, rng_);
    }

    const TrainConfig& config() const { return cfg_; }
    TrainConfig& config() { return cfg_; }
    const ParamStore& store() const { return store_; }
    const MorphObject& source() const { return src_; }
    const MorphObject& target() const { return tgt_; }
    const GeodesicTable& source_table() const { return table_src_; }
    const GeodesicTable& target_table() const { return table_tgt_; }
    const std::vector<LossTerms>& history() const { return history_; }
    int64_t iterations_done() const { return iterations_done_; }

    /// One full iteration: forward, losses, backward, Adam. Throws
    /// numeric_error on a non-finite loss, leaving parameters untouched.
    LossTerms step() {
        // rng draw order is part of the replay contract
        std::vector<double> arap_times;
        for (int k = 0; k < cfg_.timestep_draws; ++k) arap_times.push_back(rng_.uniform() * (1.0 - cfg_.arap_dt));
        arap_times.push_back(1.0 - cfg_.arap_dt);
        double color_time = rng_.uniform();

        Tape tape;
        Tape::Var vs = tape.constant(v_src_);
        Tape::Var vt = tape.constant(v_tgt_);

        Tape::Var fs = vertex_features(tape, store_, src_.mesh, agg_src_, feat_cfg_);
        Tape::Var ft = vertex_features(tape, store_, tgt_.mesh, agg_tgt_, feat_cfg_);
        Tape::Var pi = build_pi(tape, fs, ft, cfg_.sigma);
        Tape::Var delta= displacement_field(tape, vs, pi, vt);

        Tape::Var pi_s = build_pi_sampled(tape, fs, ft, table_src_.sample_ids, table_tgt_.sample_ids, cfg_.sigma);
        Tape::Var geo = geodesic_distortion_loss(tape, pi_s, geo_data_);

        Tape::Var arap = -1;
        for (double t : arap_times) {
            Tape::Var va = morph_positions(tape, store_, vs, delta, t);
            Tape::Var vb = morph_positions(tape, store_, vs, delta, t + cfg_.arap_dt);
            auto rot = fit_ring_rotations(arap_topo_, to_vec3_rows(tape.value(va)), to_vec3_rows(tape.value(vb)));
            Tape::Var e = arap_energy(tape, va, vb, arap_topo_, rot);
            arap = arap < 0 ? e : tape.add(arap, e);
        }
        arap = tape.scale(arap, 1.0 / double(arap_times.size()));

        Tape::Var cm = morph_colors(tape, tape.constant(c_src_), pi, tape.constant(c_tgt_), color_time);
        Tape::Var smooth = color_smoothness_loss(tape, cm, smooth_topo_);

        Tape::Var v1 = morph_positions(tape, store_, vs, delta, 1.0);
        Tape::Var align = alignment_loss(tape, v1, pi, vt);

        Tape::Var total = weighted_total(tape, geo, arap, smooth, align, cfg_.weights);

        LossTerms terms;
        terms.geo = tape.value(geo).data[0];
        terms.arap = tape.value(arap).data[0];
        terms.smooth = tape.value(smooth).data[0];
        terms.align = tape.value(align).data[0];
        terms.total = tape.value(total).data[0];
        if (!std::isfinite(terms.total)) throw numeric_error(cat("training diverged: total loss ", terms.total));

        check_row_stochastic(tape.value(pi));

        tape.backward(total);
        store_.collect_grads(tape);
        store_.adam_step(cfg_.learning_rate, cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps);

        ++iterations_done_;
        history_.push_back(terms);
        return terms;
    }

    template <typename Fn>
    void run(int iterations, Fn&& per_iteration) {
        for (int i = 0; i < iterations; ++i) {
            LossTerms t = step();
            per_iteration(int(iterations_done_) - 1, t);
        }
    }
    void run(int iterations) {
        run(iterations, [](int, const LossTerms&) {});
    }

    /// Full assignment matrix for the current parameters (no gradients kept).
    Matrix full_pi() {
        Tape tape;
        Tape::Var fs = vertex_features(tape, store_, src_.mesh, agg_src_, feat_cfg_);
        Tape::Var ft = vertex_features(tape, store_, tgt_.mesh, agg_tgt_, feat_cfg_);
        return tape.value(build_pi(tape, fs, ft, cfg_.sigma));
    }

    Matrix sampled_pi() {
        Tape tape;
        Tape::Var fs = vertex_features(tape, store_, src_.mesh, agg_src_, feat_cfg_);
        Tape::Var ft = vertex_features(tape, store_, tgt_.mesh, agg_tgt_, feat_cfg_);
        return tape.value(
            build_pi_sampled(tape, fs, ft, table_src_.sample_ids, table_tgt_.sample_ids, cfg_.sigma));
    }

    /// Interpolated positions and colors on the given timestep grid.
    MorphState morph(const std::vector<double>& timesteps) {
        MorphState state;
        state.timesteps = timesteps;
        Tape tape;
        Tape::Var vs = tape.constant(v_src_);
        Tape::Var vt = tape.constant(v_tgt_);
        Tape::Var fs = vertex_features(tape, store_, src_.mesh, agg_src_, feat_cfg_);
        Tape::Var ft = vertex_features(tape, store_, tgt_.mesh, agg_tgt_, feat_cfg_);
        Tape::Var pi = build_pi(tape, fs, ft, cfg_.sigma);
        Tape::Var delta = displacement_field(tape, vs, pi, vt);
        Tape::Var cs = tape.constant(c_src_);
        Tape::Var ct = tape.constant(c_tgt_);
        for (double t : timesteps) {
            Tape::Var v = morph_positions(tape, store_, vs, delta, t);
            Tape::Var c = morph_colors(tape, cs, pi, ct, t);
            state.positions.push_back(to_vec3_rows(tape.value(v)));
            state.colors.push_back(to_vec3_rows(tape.value(c)));
        }
        state.validate();
        return state;
    }

    double accuracy(const std::vector<int>& gt_map) {
        return correspondence_accuracy(sampled_pi(), table_src_.sample_ids, table_tgt_.sample_ids, gt_map,
                                       table_tgt_);
    }

    // ------------------------------------------------------- checkpointing

    void save_checkpoint(const std::string& path) const {
        std::vector<std::pair<std::string, Matrix>> tensors;
        for (const auto& e : store_.entries) {
            tensors.emplace_back(e.name, e.value);
            tensors.emplace_back("adam_m." + e.name, e.m);
            tensors.emplace_back("adam_v." + e.name, e.v);
        }
        save_tensors(path, tensors, kCheckpointMagic);

        nlohmann::json meta;
        meta["format"] = "morphkit-checkpoint";
        meta["version"] = 1;
        meta["iterations_done"] = iterations_done_;
        meta["adam_step"] = store_.step;
        meta["rng_state"] = rng_.state;
        meta["seed"] = cfg_.seed;
        meta["source_hash"] = hex64(mesh_content_hash(src_.mesh));
        meta["target_hash"] = hex64(mesh_content_hash(tgt_.mesh));
        meta["config"] = config_json();
        write_file_bytes(path + ".json", meta.dump(2) + "\n");
    }

    /// Restores parameters, Adam state and the rng stream position so that a
    /// resumed run continues bit-identically. The object pair must hash to
    /// the checkpoint's inputs; changed loss weights are allowed and logged.
    void load_checkpoint(const std::string& path) {
        auto tensors = load_tensors(path, kCheckpointMagic);
        std::string meta_bytes = read_file_bytes(path + ".json");
        nlohmann::json meta = nlohmann::json::parse(meta_bytes, nullptr, false);
        if (meta.is_discarded()) throw parse_error(cat(path, ".json: invalid metadata"));
        if (!meta.contains("version") || meta["version"].get<int>() != 1)
            throw config_error(cat(path, ": checkpoint version mismatch"));
        if (meta["source_hash"].get<std::string>() != hex64(mesh_content_hash(src_.mesh)) ||
            meta["target_hash"].get<std::string>() != hex64(mesh_content_hash(tgt_.mesh)))
            throw config_error(cat(path, ": checkpoint was trained on different inputs"));
        if (meta["config"]["lambda_geo"].get<double>() != cfg_.weights.geo ||
            meta["config"]["lambda_arap"].get<double>() != cfg_.weights.arap ||
            meta["config"]["lambda_smooth"].get<double>() != cfg_.weights.smooth ||
            meta["config"]["lambda_align"].get<double>() != cfg_.weights.align)
            warn("resuming with changed loss weights");

        for (auto& [name, m] : tensors) {
            bool is_m = name.rfind("adam_m.", 0) == 0;
            bool is_v = name.rfind("adam_v.", 0) == 0;
            std::string base = is_m || is_v ? name.substr(7) : name;
            ParamStore::Entry& e = store_.at(base);
            Matrix& dst = is_m ? e.m : is_v ? e.v : e.value;
            if (!dst.same_shape(m))
                throw config_error(cat(path, ": tensor ", name, " has shape ", m.shape_str(), ", expected ",
                                       dst.shape_str()));
            dst = std::move(m);
        }
        store_.step = meta["adam_step"].get<int64_t>();
        rng_.state = meta["rng_state"].get<uint64_t>();
        iterations_done_ = meta["iterations_done"].get<int64_t>();
        history_.clear();
    }

    nlohmann::json config_json() const {
        nlohmann::json j;
        j["iterations"] = cfg_.iterations;
        j["learning_rate"] = cfg_.learning_rate;
        j["adam_beta1"] = cfg_.adam_beta1;
        j["adam_beta2"] = cfg_.adam_beta2;
        j["adam_eps"] = cfg_.adam_eps;
        j["lambda_geo"] = cfg_.weights.geo;
        j["lambda_arap"] = cfg_.weights.arap;
        j["lambda_smooth"] = cfg_.weights.smooth;
        j["lambda_align"] = cfg_.weights.align;
        j["geodesic_samples"] = cfg_.geodesic_samples;
        j["knn_k"] = cfg_.knn_k;
        j["sigma"] = cfg_.sigma;
        j["hidden_width"] = cfg_.hidden_width;
        j["feature_dim"] = cfg_.feature_dim;
        j["timestep_draws"] = cfg_.timestep_draws;
        j["arap_dt"] = cfg_.arap_dt;
        j["smooth_eps"] = cfg_.smooth_eps;
        j["seed"] = cfg_.seed;
        j["checkpoint_interval"] = cfg_.checkpoint_interval;
        return j;
    }

private:
    static void check_row_stochastic(const Matrix& pi) {
        for (int r = 0; r < pi.rows; ++r) {
            double s = 0;
            for (int c = 0; c < pi.cols; ++c) s += pi.at(r, c);
            if (std::abs(s - 1.0) > 1e-9)
                throw numeric_error(cat("assignment row ", r, " sums to ", s, ", expected 1"));
        }
    }

    MorphObject src_, tgt_;
    TrainConfig cfg_;
    Rng rng_;
    ParamStore store_;
    FeatureNetConfig feat_cfg_;
    MeshAggregation agg_src_, agg_tgt_;
    HybridGraph graph_src_, graph_tgt_;
    GeodesicTable table_src_, table_tgt_;
    GeodesicLossData geo_data_;
    ArapTopology arap_topo_;
    SmoothTopology smooth_topo_;
    Matrix v_src_, v_tgt_, c_src_, c_tgt_;
    std::vector<LossTerms> history_;
    int64_t iterations_done_ = 0;
};

/// Loss history CSV: `iter,geo,arap,smooth,align,total`, one row per
/// completed iteration starting at `first_iter`.
inline void write_loss_csv(const std::string& path, const std::vector<LossTerms>& history,
                           int64_t first_iter = 0, bool append = false) {
    std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
    if (!out) throw file_error(cat("cannot write ", path));
    if (!append) out << "iter,geo,arap,smooth,align,total\n";
    char buf[256];
    for (size_t i = 0; i < history.size(); ++i) {
        const LossTerms& t = history[i];
        std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      static_cast<long long>(first_iter + int64_t(i)), t.geo, t.arap, t.smooth, t.align, t.total);
        out << buf;
    }
}

}  // namespace morphkit
