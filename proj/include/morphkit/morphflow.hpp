#pragma once

#include <filesystem>

#include "morphkit/binding.hpp"
#include "morphkit/correspond.hpp"

namespace morphkit {

// --------------------------------------------------------------- flow net

/// Per-vertex MLP for the time-conditioned deformation field. Input is
/// [position(3), displacement(3), t(1)], three hidden layers of 128 with
/// leaky ReLU, linear 3-d output. The output is multiplied by t, which pins
/// the deformation at t=0 to exactly zero.
struct FlowNetConfig {
    static constexpr int input_dim = 7;
    static constexpr int hidden = 128;
    static constexpr int hidden_layers = 3;
    static constexpr double leaky_slope = 0.01;
};

inline void init_flow_net(ParamStore& store, Rng& rng) {
    int in = FlowNetConfig::input_dim;
    for (int l = 0; l < FlowNetConfig::hidden_layers; ++l) {
        store.add(cat("flow.w", l), kaiming_uniform(in, FlowNetConfig::hidden, rng));
        store.add(cat("flow.b", l), Matrix(1, FlowNetConfig::hidden));
        in = FlowNetConfig::hidden;
    }
    store.add(cat("flow.w", FlowNetConfig::hidden_layers), kaiming_uniform(in, 3, rng));
    store.add(cat("flow.b", FlowNetConfig::hidden_layers), Matrix(1, 3));
}

/// Displacement field pulling every source vertex toward its soft match:
/// pi * V_tgt - V_src.
inline Tape::Var displacement_field(Tape& tape, Tape::Var v_src, Tape::Var pi, Tape::Var v_tgt) {
    return tape.sub(tape.matmul(pi, v_tgt), v_src);
}

/// Deformed source positions at time t in [0,1].
inline Tape::Var morph_positions(Tape& tape, ParamStore& store, Tape::Var v_src, Tape::Var delta, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw numeric_error(cat("morph_positions: t=", t, " outside [0,1]"));
    const Matrix& vs = tape.value(v_src);
    Tape::Var tcol = tape.constant(Matrix(vs.rows, 1, t));
    Tape::Var x = tape.concat_cols(tape.concat_cols(v_src, delta), tcol);
    for (int l = 0; l < FlowNetConfig::hidden_layers; ++l) {
        x = tape.add(tape.matmul(x, store.feed(tape, cat("flow.w", l))), store.feed(tape, cat("flow.b", l)));
        x = tape.leaky_relu(x, FlowNetConfig::leaky_slope);
    }
    x = tape.add(tape.matmul(x, store.feed(tape, cat("flow.w", FlowNetConfig::hidden_layers))),
                 store.feed(tape, cat("flow.b", FlowNetConfig::hidden_layers)));
    return tape.add(v_src, tape.scale(x, t));
}

/// Linear blend between source colors and the pi-pulled target colors.
/// Both inputs live in [0,1] and pi is row-stochastic, so the blend needs no
/// clamp beyond rounding noise.
inline Tape::Var morph_colors(Tape& tape, Tape::Var c_src, Tape::Var pi, Tape::Var c_tgt, double t) {
    return tape.add(tape.scale(c_src, 1.0 - t), tape.scale(tape.matmul(pi, c_tgt), t));
}

// --------------------------------------------------------------- sequence

/// Interpolated sequence on the source topology: positions and colors per
/// timestep, in the normalized frame.
struct MorphState {
    std::vector<double> timesteps;                 // ascending, includes 0 and 1
    std::vector<std::vector<Vec3>> positions;      // per timestep
    std::vector<std::vector<Vec3>> colors;         // per timestep

    void validate() const {
        if (timesteps.size() < 2 || timesteps.front() != 0.0 || timesteps.back() != 1.0)
            throw numeric_error("morph state: timesteps must ascend from 0 to 1");
        for (size_t i = 1; i < timesteps.size(); ++i)
            if (timesteps[i] <= timesteps[i - 1])
                throw numeric_error("morph state: timesteps must be strictly increasing");
        if (positions.size() != timesteps.size() || colors.size() != timesteps.size())
            throw numeric_error("morph state: per-timestep arrays out of sync");
    }
};

inline std::string frame_name(const char* stem, int index, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03d.%s", stem, index, ext);
    return buf;
}

/// Writes one colored OBJ per timestep (frame_000.obj ...), optional updated
/// Gaussian PLYs, and manifest.txt listing the timestep values. Geometry is
/// mapped back to the source's original frame through `tf`.
inline void export_sequence(const MorphState& state, const Mesh& mesh, const GaussianSet* gs,
                            const NormalizeTransform& tf, const std::string& out_dir) {
    state.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (!std::filesystem::is_directory(out_dir))
        throw file_error(cat("export_sequence: cannot create directory ", out_dir));

    for (size_t k = 0; k < state.timesteps.size(); ++k) {
        Mesh frame = mesh;
        frame.vertices.resize(state.positions[k].size());
        for (size_t i = 0; i < frame.vertices.size(); ++i) frame.vertices[i] = tf.invert(state.positions[k][i]);
        frame.colors = state.colors[k];
        for (auto& c : frame.colors)
            c = {std::clamp(c.x, 0.0, 1.0), std::clamp(c.y, 0.0, 1.0), std::clamp(c.z, 0.0, 1.0)};
        compute_vertex_normals(frame);
        save_obj(out_dir + "/" + frame_name("frame", int(k), "obj"), frame);

        if (gs && gs->bound()) {
            auto mu = update_gaussian_positions(*gs, mesh, state.positions[k]);
            for (auto& p : mu) p = tf.invert(p);
            save_gaussians(out_dir + "/" + frame_name("frame", int(k), "ply"), *gs, &mu);
        }
    }
    std::ofstream manifest(out_dir + "/manifest.txt", std::ios::trunc);
    if (!manifest) throw file_error(cat("export_sequence: cannot write manifest in ", out_dir));
    char buf[64];
    for (double t : state.timesteps) {
        std::snprintf(buf, sizeof buf, "%.17g\n", t);
        manifest << buf;
    }
}

/// Uniform timestep grid {0, 1/(n-1), ..., 1}.
inline std::vector<double> uniform_timesteps(int frames) {
    if (frames < 2) throw numeric_error("uniform_timesteps: need at least 2 frames");
    std::vector<double> t(size_t(frames));
    for (int i = 0; i < frames; ++i) t[size_t(i)] = double(i) / double(frames - 1);
    t.front() = 0.0;
    t.back() = 1.0;
    return t;
}

}  // namespace morphkit
