#include "gtex/cli.hpp"

#include "gtex/animation.hpp"
#include "gtex/config.hpp"
#include "gtex/diff.hpp"
#include "gtex/fixtures.hpp"
#include "gtex/frames.hpp"
#include "gtex/gaussian_texture.hpp"
#include "gtex/metrics.hpp"
#include "gtex/projection.hpp"
#include "gtex/renderer.hpp"
#include "gtex/training.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <ostream>

namespace gtex::cli {

namespace {

namespace fs = std::filesystem;

/// Bad arguments, missing inputs or malformed configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

struct Settings {
  TrainConfig train;
  SineDeformer sine;
  double iou_threshold = 0.5;
};

void apply(const KeyValueConfig& kv, Settings& s) {
  auto& t = s.train;
  kv.read("lambda_1", t.weights.lambda_1);
  kv.read("lambda_phi", t.weights.lambda_phi);
  kv.read("lambda_w", t.weights.lambda_w);
  kv.read("epsilon_phi", t.weights.epsilon_phi);
  kv.read("mean_regularizers", t.weights.mean_regularizers);
  kv.read("iterations", t.iterations);
  kv.read("seed", t.seed);
  kv.read("log_interval", t.log_interval);
  kv.read("background", t.background);
  kv.read("lr.uv", t.lr.uv);
  kv.read("lr.w", t.lr.w);
  kv.read("lr.theta", t.lr.theta);
  kv.read("lr.log_scale", t.lr.log_scale);
  kv.read("lr.opacity", t.lr.opacity);
  kv.read("lr.color", t.lr.color);
  kv.read("lr.position_final_factor", t.lr.position_final_factor);
  kv.read("adam.beta1", t.lr.beta1);
  kv.read("adam.beta2", t.lr.beta2);
  kv.read("adam.eps", t.lr.eps);
  kv.read("densify.interval", t.densify_interval);
  kv.read("densify.start", t.densify_start);
  kv.read("densify.stop", t.densify_stop);
  kv.read("densify.grad_threshold", t.densify.grad_threshold);
  kv.read("densify.split_factor", t.densify.split_factor);
  kv.read("densify.percent_dense", t.densify.percent_dense);
  kv.read("prune.alpha", t.prune_alpha);
  std::uint64_t max_gaussians = t.max_gaussians;
  kv.read("max_gaussians", max_gaussians);
  t.max_gaussians = static_cast<std::size_t>(max_gaussians);
  kv.read("init.scale_factor", t.init.scale_factor);
  kv.read("init.opacity", t.init.opacity);
  kv.read("init.color", t.init.color);
  kv.read("init.sh_degree", t.init.sh_degree);
  kv.read("threads", t.render.threads);
  kv.read("render.tile_size", t.render.tile_size);
  kv.read("render.dilation", t.render.dilation);
  kv.read("render.alpha_min", t.render.alpha_min);
  kv.read("render.alpha_max", t.render.alpha_max);
  kv.read("render.transmittance_min", t.render.transmittance_min);
  kv.read("render.sigma_extent", t.render.sigma_extent);
  kv.read("sine.axis", s.sine.axis);
  kv.read("sine.direction", s.sine.direction);
  kv.read("sine.amplitude", s.sine.amplitude);
  kv.read("sine.frequency", s.sine.frequency);
  kv.read("sine.phase_rate", s.sine.phase_rate);
  kv.read("iou.threshold", s.iou_threshold);
  auto unused = kv.unused_keys();
  if (!unused.empty()) throw ValidationError("unknown config key '" + unused.front() + "'");
  if (!(s.sine.axis.norm() > 0.0) || !(s.sine.direction.norm() > 0.0)) {
    throw ValidationError("sine axis and direction must be non-zero");
  }
  s.sine.axis.normalize();
  s.sine.direction.normalize();
}

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  int threads = -1;
};

void add_common(CLI::App* cmd, CommonOptions& c) {
  cmd->add_option("--config", c.config_file, "key = value configuration file");
  cmd->add_option("--set", c.overrides, "override one configuration key (key=value)");
  cmd->add_option("--threads", c.threads, "worker threads (default: logical cores)");
}

Settings resolve(const CommonOptions& c) {
  KeyValueConfig kv;
  if (!c.config_file.empty()) {
    if (!fs::exists(c.config_file)) throw ValidationError("config file not found: " + c.config_file);
    kv = KeyValueConfig::load(c.config_file);
  }
  for (const auto& o : c.overrides) {
    auto eq = o.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + o + "'");
    kv.set(o.substr(0, eq), o.substr(eq + 1));
  }
  Settings s;
  s.train.log_interval = 100;
  apply(kv, s);
  if (c.threads >= 0) s.train.render.threads = c.threads;
  return s;
}

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw ValidationError(std::string(what) + " not found: " + path);
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::string frame_name(int f, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04d%s", f, ext);
  return buf;
}

int make_fixture(const std::string& kind, const fs::path& dir, const Settings& s, std::ostream& out) {
  fs::create_directories(dir);
  const Vec3 bg = s.train.background;
  ProxyMesh mesh;
  GaussianTexture reference;
  std::vector<Camera> cameras;
  if (kind == "quad") {
    mesh = fixtures::grid_mesh(1, 1, 2.0);
    reference = fixtures::reference_texture(mesh, 3);
    const double fov = 0.8;
    for (Vec3 eye : {Vec3(0.3, 0.2, 3.0), Vec3(-0.6, 0.1, 2.8), Vec3(0.2, -0.7, 2.9),
                     Vec3(-0.3, -0.3, 3.2)}) {
      cameras.push_back(Camera::from_fov(64, 64, fov, look_at(eye, Vec3::Zero(), Vec3::UnitY())));
    }
  } else if (kind == "sphere") {
    mesh = fixtures::island_atlas(fixtures::icosphere(2));
    reference = fixtures::reference_texture(mesh, 7);
    cameras = fixtures::orbit_cameras(20, 3.0, 128, 0.9);
  } else {
    throw ValidationError("unknown fixture '" + kind + "' (expected quad or sphere)");
  }
  write_obj(mesh, dir / "mesh.obj");
  save(reference, dir / "reference.3dgt");
  FrameSet frames = fixtures::render_frames(reference, mesh, cameras, bg, s.train.render);
  write_frame_set(frames, dir / "transforms.json", bg);
  write_camera(cameras.front(), dir / "camera.json");
  out << "wrote " << kind << " fixture to " << dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaussian textures on proxy meshes", "gtex"};
  app.require_subcommand(1);
  CommonOptions common;

  // train
  std::string mesh_path, frames_path, output, model_path, camera_path, source_path, target_path;
  std::string dir_a, dir_b, deformer = "sine", lattice_path, sequence_dir;
  int iterations = -1, frames_count = 60;
  std::int64_t seed = -1;
  auto* train_cmd = app.add_subcommand("train", "optimize a Gaussian texture against posed images");
  train_cmd->add_option("mesh", mesh_path, "proxy mesh (OBJ with UVs)")->required();
  train_cmd->add_option("frames", frames_path, "transforms JSON")->required();
  train_cmd->add_option("-o,--output", output, "output 3DGT")->required();
  train_cmd->add_option("--iterations", iterations, "optimization steps");
  train_cmd->add_option("--seed", seed, "random seed");
  add_common(train_cmd, common);

  auto* render_cmd = app.add_subcommand("render", "render a 3DGT on its mesh");
  render_cmd->add_option("model", model_path, "3DGT file")->required();
  render_cmd->add_option("mesh", mesh_path, "proxy mesh")->required();
  render_cmd->add_option("--camera", camera_path, "camera JSON")->required();
  render_cmd->add_option("-o,--output", output, "output PNG")->required();
  add_common(render_cmd, common);

  auto* animate_cmd = app.add_subcommand("animate", "deform the proxy mesh and render each frame");
  animate_cmd->add_option("model", model_path, "3DGT file")->required();
  animate_cmd->add_option("mesh", mesh_path, "rest proxy mesh")->required();
  animate_cmd->add_option("--deformer", deformer, "sine, lattice or sequence")
      ->check(CLI::IsMember({"sine", "lattice", "sequence"}));
  animate_cmd->add_option("--lattice", lattice_path, "lattice JSON (deformer = lattice)");
  animate_cmd->add_option("--sequence", sequence_dir, "frame_%04d.obj directory (deformer = sequence)");
  animate_cmd->add_option("--frames", frames_count, "frame count");
  animate_cmd->add_option("--camera", camera_path, "camera JSON")->required();
  animate_cmd->add_option("-o,--output", output, "output directory")->required();
  add_common(animate_cmd, common);

  auto* transfer_cmd = app.add_subcommand("transfer", "rebind a 3DGT onto another mesh sharing the atlas");
  transfer_cmd->add_option("model", model_path, "3DGT file")->required();
  transfer_cmd->add_option("source", source_path, "mesh the model was trained on")->required();
  transfer_cmd->add_option("target", target_path, "target mesh")->required();
  transfer_cmd->add_option("-o,--output", output, "output 3DGT")->required();
  add_common(transfer_cmd, common);

  auto* eval_cmd = app.add_subcommand("eval", "PSNR / SSIM / IoU between two image directories");
  eval_cmd->add_option("a", dir_a, "first directory")->required();
  eval_cmd->add_option("b", dir_b, "second directory")->required();
  add_common(eval_cmd, common);

  int gc_gaussians = 10, gc_size = 32;
  double gc_h = 1e-4;
  std::uint64_t gc_seed = 0;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of the gradients");
  grad_cmd->add_option("--seed", gc_seed, "scene seed");
  grad_cmd->add_option("--gaussians", gc_gaussians, "Gaussian count")->check(CLI::Range(1, 100));
  grad_cmd->add_option("--size", gc_size, "image size")->check(CLI::Range(11, 64));
  grad_cmd->add_option("--step", gc_h, "finite-difference step");

  std::string fixture_kind;
  auto* fixture_cmd = app.add_subcommand("make-fixture", "write a synthetic scene");
  fixture_cmd->group("");
  fixture_cmd->add_option("kind", fixture_kind, "quad or sphere")->required();
  fixture_cmd->add_option("-o,--output", output, "output directory")->required();
  add_common(fixture_cmd, common);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kExitValidation;
  }

  try {
    Settings s = resolve(common);
    if (*train_cmd) {
      require_file(mesh_path, "mesh");
      require_file(frames_path, "frames JSON");
      if (iterations >= 0) s.train.iterations = iterations;
      if (seed >= 0) s.train.seed = static_cast<std::uint64_t>(seed);
      s.train.validate();
      ProxyMesh mesh = load_proxy_mesh(mesh_path);
      FrameSet frames = load_frame_set(frames_path, s.train.background);
      TrainResult r = train(frames, mesh, s.train);
      char buf[128];
      for (const auto& e : r.log) {
        std::snprintf(buf, sizeof(buf), "iter %6d  loss %.6f  psnr %.3f  gaussians %zu\n", e.iteration,
                      e.loss, e.psnr, e.gaussians);
        out << buf;
      }
      ensure_parent(output);
      save(r.texture, fs::path(output));
      out << "saved " << r.texture.size() << " Gaussians to " << output << "\n";
    } else if (*render_cmd) {
      require_file(model_path, "model");
      require_file(mesh_path, "mesh");
      require_file(camera_path, "camera JSON");
      ProxyMesh mesh = load_proxy_mesh(mesh_path);
      GaussianTexture gt = load(fs::path(model_path));
      Camera cam = load_camera(camera_path);
      ImageRGBA image = render(world_gaussians(gt, mesh), cam, s.train.background, s.train.render);
      ensure_parent(output);
      write_png(image, output);
    } else if (*animate_cmd) {
      require_file(model_path, "model");
      require_file(mesh_path, "mesh");
      require_file(camera_path, "camera JSON");
      if (frames_count < 1) throw ValidationError("--frames must be positive");
      ProxyMesh mesh = load_proxy_mesh(mesh_path);
      GaussianTexture gt = load(fs::path(model_path));
      Camera cam = load_camera(camera_path);
      Deformer d = s.sine;
      if (deformer == "lattice") {
        if (lattice_path.empty()) throw ValidationError("--lattice is required for the lattice deformer");
        require_file(lattice_path, "lattice JSON");
        d = LatticeDeformer::load(lattice_path);
      } else if (deformer == "sequence") {
        if (sequence_dir.empty()) throw ValidationError("--sequence is required for the sequence deformer");
        if (!fs::is_directory(sequence_dir)) throw ValidationError("not a directory: " + sequence_dir);
        d = MeshSequence::load(sequence_dir, mesh);
      }
      fs::create_directories(output);
      std::size_t clamped = 0;
      for (int f = 0; f < frames_count; ++f) {
        DeformResult def = apply_deformer(mesh, d, f);
        clamped += def.clamped;
        ImageRGBA image = render(world_gaussians(gt, def.mesh), cam, s.train.background, s.train.render);
        write_png(image, fs::path(output) / frame_name(f, ".png"));
      }
      if (clamped) err << "warning: " << clamped << " vertex positions clamped into the lattice box\n";
      out << "wrote " << frames_count << " frames to " << output << "\n";
    } else if (*transfer_cmd) {
      require_file(model_path, "model");
      require_file(source_path, "source mesh");
      require_file(target_path, "target mesh");
      GaussianTexture gt = load(fs::path(model_path));
      ProxyMesh source = load_proxy_mesh(source_path);
      if (gt.mesh_fingerprint != mesh_fingerprint(source)) {
        throw ValidationError("model was not authored against " + source_path);
      }
      ProxyMesh target = load_proxy_mesh(target_path);
      RebindResult r = rebind(gt, target);
      ensure_parent(output);
      save(r.texture, fs::path(output));
      out << "rebound " << r.texture.size() << " Gaussians, dropped " << r.dropped << "\n";
    } else if (*eval_cmd) {
      for (const auto& d : {dir_a, dir_b}) {
        if (!fs::is_directory(d)) throw ValidationError("not a directory: " + d);
      }
      out << evaluate_directories(dir_a, dir_b, s.iou_threshold).table();
    } else if (*grad_cmd) {
      Scene scene = random_scene(gc_seed, gc_gaussians, gc_size);
      out << "seed " << gc_seed << ", " << scene.texture.size() << " Gaussians, " << gc_size << "x"
          << gc_size << "\n";
      out << grad_check(scene, gc_h).text();
    } else if (*fixture_cmd) {
      return make_fixture(fixture_kind, output, s, out);
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace gtex::cli
