#include "cli/commands.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <utility>

#include "cli/manifest.hpp"
#include "json.hpp"
#include "rps/io.hpp"
#include "rps/parallel.hpp"
#include "rps/pipeline.hpp"

namespace rps::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Runs one stage, converting library exceptions into StageError with the
// matching exit code.
template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  spdlog::debug("stage {}", name);
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const ValidationError& e) {
    throw StageError(name, exit_validation, e.what());
  } catch (const FormatError& e) {
    throw StageError(name, exit_validation, e.what());
  } catch (const json::exception& e) {
    throw StageError(name, exit_validation, e.what());
  } catch (const std::exception& e) {
    throw StageError(name, exit_runtime, e.what());
  }
}

void prepare(const CommonOptions& common) {
  set_max_threads(common.threads);
  std::error_code ec;
  fs::create_directories(common.out, ec);
  if (ec) throw StageError("setup", exit_runtime, "cannot create output directory " + common.out.string());
}

json read_json(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) throw FormatError(what + " not found: " + path.string());
  std::ifstream is(path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw FormatError(what + " " + path.string() + ": " + e.what());
  }
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

void log_warnings(const std::string& where, const Warnings& w) {
  for (const auto& s : w) spdlog::warn("{}: {}", where, s);
}

// Radar-side settings of the simulate command. The radar parameters may sit
// under "radar" or at the top level.
struct RadarSetup {
  SimulationOptions sim;
};

RadarSetup parse_radar_setup(const json& j) {
  RadarSetup r;
  r.sim.radar = radar_config_from_json(j.contains("radar") ? j.at("radar") : j);
  if (j.contains("array")) r.sim.array = antenna_array_from_json(j.at("array"));
  if (j.contains("snr_db")) {
    if (j.at("snr_db").is_null())
      r.sim.snr_db.reset();
    else
      r.sim.snr_db = j.at("snr_db").get<double>();
  }
  r.sim.a0 = j.value("kernel_radius_m", r.sim.a0);
  r.sim.threshold_db = j.value("threshold_db", r.sim.threshold_db);
  r.sim.patch_radius = j.value("patch_radius_m", r.sim.patch_radius);
  r.sim.discontinuity_mm = j.value("discontinuity_mm", r.sim.discontinuity_mm);
  if (!(r.sim.a0 >= 0.0) || !(r.sim.patch_radius >= 0.0))
    throw ValidationError("radar setup: kernel_radius_m and patch_radius_m must be non-negative");
  if (!(r.sim.threshold_db <= 0.0)) throw ValidationError("radar setup: threshold_db must be <= 0");
  return r;
}

std::vector<double> truth_on_grid(const GroundTruthTable& gt, std::size_t part, double t0, double rate,
                                  std::size_t n) {
  if (part >= gt.line_of_sight.size())
    throw ValidationError("ground truth has no part " + std::to_string(part));
  if (gt.times.size() < 2) throw ValidationError("ground truth needs at least two samples");
  return resample_truth(gt.times, gt.line_of_sight[part], t0, rate, n);
}

void write_power_map_csv(const fs::path& path, const ScatterPowerMap& map) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "vertex,x_m,y_m,z_m,power\n" << std::setprecision(10);
  const auto& mesh = *map.mesh;
  for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
    if (!mesh.vertex_valid[i]) continue;
    const auto& v = mesh.vertices[i];
    os << i << ',' << v.x() << ',' << v.y() << ',' << v.z() << ',' << map.power[i] << '\n';
  }
}

std::vector<double> time_axis(const DisplacementTrace& d) {
  std::vector<double> t(d.d.size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = d.time(k);
  return t;
}

std::vector<double> scaled(const std::vector<double>& v, double s) {
  auto out = v;
  for (auto& x : out) x *= s;
  return out;
}

// Range-azimuth slice of the image at the elevation of its peak, in dB.
Grid image_slice(const RadarImage& img) {
  Grid g;
  g.x = img.azimuth_deg;
  g.y = img.range_m;
  const auto peak = img.argmax();
  const double pmax = img.at(peak.range, peak.azimuth, peak.elevation);
  for (std::size_t r = 0; r < img.range_m.size(); ++r)
    for (std::size_t a = 0; a < img.azimuth_deg.size(); ++a)
      g.values.push_back(std::max(-60.0, db10(std::max(img.at(r, a, peak.elevation), 1e-300) / pmax)));
  return g;
}

Grid spectrogram_grid(const SpectrogramData& s) {
  Grid g;
  g.x = s.times;
  g.y = s.freqs;
  const std::size_t nf = s.freqs.size();
  for (std::size_t f = 0; f < nf; ++f)
    for (std::size_t t = 0; t < s.frames(); ++t) g.values.push_back(s.at(t, f));
  return g;
}

void add_plot(RunManifest& manifest, const std::string& stage_name, const std::optional<fs::path>& p) {
  if (p) manifest.output(stage_name, *p);
}

}  // namespace

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("rps");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("RPS_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off")
      spdlog::warn("RPS_LOG='{}' not recognized; using info", env);
    else
      spdlog::set_level(level);
  }
}

// ---- synth -----------------------------------------------------------------

void run_synth(const SynthArgs& args, const CommonOptions& common) {
  prepare(common);
  RunManifest manifest("synth", common.out);
  manifest.add_config(args.scene);

  auto config = stage("config", [&] { return load_scene_config(args.scene); });
  if (common.seed) config.seed = *common.seed;
  manifest.set_seed("scene", config.seed);
  manifest.input("config", args.scene);

  const auto scene = stage("scene", [&] { return build_scene(config, args.scene.parent_path()); });
  log_warnings("scene", scene.warnings);

  spdlog::info("rendering {} frames at {} Hz", scene.config.frame_count(), scene.config.rate);
  const auto rendered = stage("render", [&] { return render_sequence(scene); });

  stage("write", [&] {
    const auto dseq = common.out / "depth.dseq";
    write_dseq(dseq, rendered.sequence, rendered.extrinsics);
    const auto truth = common.out / "ground_truth.csv";
    write_ground_truth_csv(truth, rendered.truth);
    const auto resolved = common.out / "scene.json";
    write_json(resolved, to_json(scene.config));
    for (const auto& p : {dseq, sidecar_path(dseq), truth, resolved}) manifest.output("write", p);

    std::vector<Series> series;
    for (std::size_t p = 0; p < rendered.truth.part_names.size(); ++p)
      series.push_back({rendered.truth.part_names[p], rendered.truth.times, scaled(rendered.truth.line_of_sight[p], 1e3)});
    add_plot(manifest, "write",
             line_plot(common.out / "ground_truth", {"Ground-truth line-of-sight displacement", "time (s)", "mm"},
                       series, common.plots));
  });
  manifest.write();
  spdlog::info("synth done: {}", common.out.string());
}

// ---- simulate --------------------------------------------------------------

void run_simulate(const SimulateArgs& args, const CommonOptions& common) {
  prepare(common);
  RunManifest manifest("simulate", common.out);
  manifest.add_config(args.radar);
  const std::uint64_t seed = common.seed.value_or(1);
  manifest.set_seed("noise", seed);

  const auto setup = stage("config", [&] { return parse_radar_setup(read_json(args.radar, "radar config")); });
  manifest.input("config", args.radar);
  const auto& opt = setup.sim;

  CameraCalibration calibration;
  const auto seq = stage("load", [&] {
    if (!fs::exists(sidecar_path(args.depth)))
      throw FormatError("calibration sidecar missing: " + sidecar_path(args.depth).string());
    return load_depth_sequence(args.depth, DepthFormat::raw_binary, &calibration);
  });
  manifest.input("load", args.depth);

  auto mesh = stage("mesh", [&] {
    return std::make_shared<const SurfaceMesh>(
        depth_to_mesh(time_average_depth(seq), calibration.extrinsics, opt.discontinuity_mm));
  });
  spdlog::info("mean surface: {} vertices, {} facets", mesh->vertex_count(), mesh->facet_count());

  const auto map = stage("scatter", [&] { return scatter_power_map(mesh, opt.array, opt.radar, opt.kernel_radius()); });
  log_warnings("scatter", map.warnings);
  const auto centers =
      stage("centers", [&] { return extract_centers(map, opt.threshold_db, opt.kernel_radius(), opt.eta); });
  spdlog::info("{} scattering centers", centers.size());
  if (centers.empty()) throw StageError("centers", exit_runtime, "no scattering centers above threshold");

  const auto tracks = stage("tracks", [&] {
    return track_ranges(centers, seq, calibration.extrinsics, opt.array, opt.radar, opt.tracking_radius(),
                        opt.discontinuity_mm);
  });
  log_warnings("tracks", tracks.warnings);

  const auto cube = stage("synthesis", [&] { return synthesize_if(tracks, centers, opt.array, opt.radar, opt.snr_db, seed); });
  log_warnings("synthesis", cube.warnings);

  stage("write", [&] {
    const auto files = std::vector<fs::path>{common.out / "power_map.csv", common.out / "centers.csv",
                                             common.out / "tracks.csv", common.out / "proposed.ifcb",
                                             common.out / "if_slice.csv"};
    write_power_map_csv(files[0], map);
    write_centers_csv(files[1], centers);
    write_tracks_csv(files[2], tracks);
    write_ifcb(files[3], cube);
    write_if_slice_csv(files[4], cube, 0, 0);
    for (const auto& f : files) manifest.output("write", f);
  });

  if (args.baseline) {
    manifest.set_seed("baseline_noise", seed + 1);
    const auto model = stage("baseline", [&] {
      std::vector<double> reference;
      if (args.truth) {
        manifest.input("baseline", *args.truth);
        reference = truth_on_grid(read_ground_truth_csv(*args.truth), args.truth_part, cube.start_time,
                                  opt.radar.slow_rate, cube.slow);
      } else {
        spdlog::info("baseline: no ground truth given, fitting to the proposed displacement");
        reference = evaluate_cube(cube).displacement.d;
      }
      return fit_baseline(centers, reference, opt.radar.slow_rate, cube.start_time, args.baseline_amplitude);
    });
    spdlog::info("baseline: A={} m f={} Hz phase={} rad over {} centers", model.amplitude, model.frequency,
                 model.phase, model.torso_centers.size());
    const auto baseline = stage("baseline", [&] {
      return synthesize_baseline(model, opt.array, opt.radar, cube.slow, cube.start_time, opt.snr_db, seed + 1);
    });
    stage("write", [&] {
      const auto path = common.out / "baseline.ifcb";
      write_ifcb(path, baseline);
      const auto params = common.out / "baseline.json";
      write_json(params, {{"amplitude_m", model.amplitude},
                          {"frequency_hz", model.frequency},
                          {"phase_rad", model.phase},
                          {"torso_centers", model.torso_centers.size()}});
      manifest.output("write", path);
      manifest.output("write", params);
    });
  }
  manifest.write();
  spdlog::info("simulate done: {}", common.out.string());
}

// ---- evaluate --------------------------------------------------------------

void run_evaluate(const EvaluateArgs& args, const CommonOptions& common) {
  prepare(common);
  RunManifest manifest("evaluate", common.out);

  EvaluationOptions eo;
  if (args.region) {
    manifest.add_config(*args.region);
    eo.region = stage("config", [&] { return region_from_json(read_json(*args.region, "region config")); });
    manifest.input("config", *args.region);
  }

  const auto [a, b] = stage("load", [&] {
    auto ca = read_ifcb(args.cube_a);
    auto cb = read_ifcb(args.cube_b);
    if (!(ca.cfg == cb.cfg)) throw ValidationError("cubes do not share a RadarConfig");
    if (ca.channels != cb.channels || ca.slow != cb.slow)
      throw ValidationError("cubes differ in channel count or slow-time length");
    return std::make_pair(std::move(ca), std::move(cb));
  });
  manifest.input("load", args.cube_a);
  manifest.input("load", args.cube_b);

  const auto pa = stage("products", [&] { return evaluate_cube(a, eo); });
  const auto pb = stage("products", [&] { return evaluate_cube(b, eo); });
  log_warnings("cube a", pa.warnings);
  log_warnings("cube b", pb.warnings);

  auto report = stage("metrics", [&] { return compare_products(pa, pb, eo.region); });
  log_warnings("metrics", report.warnings);
  json j = to_json(report);
  j["region"] = to_json(eo.region);
  j["cells"] = {{"a", {{"range_m", pa.displacement.range_m}, {"azimuth_deg", pa.displacement.azimuth_deg},
                       {"elevation_deg", pa.displacement.elevation_deg}}},
                {"b", {{"range_m", pb.displacement.range_m}, {"azimuth_deg", pb.displacement.azimuth_deg},
                       {"elevation_deg", pb.displacement.elevation_deg}}}};

  std::vector<double> truth;
  if (args.truth) {
    stage("truth", [&] {
      manifest.input("truth", *args.truth);
      const auto& d = pa.displacement;
      truth = truth_on_grid(read_ground_truth_csv(*args.truth), args.truth_part, d.start_time, d.rate, d.d.size());
      const auto truth_hf = respiration_highpass(truth, d.rate);
      const auto sa = displacement_metrics(pa.displacement.d_hf, truth_hf);
      const auto sb = displacement_metrics(pb.displacement.d_hf, truth_hf);
      const auto fr = respiration_rate(truth_hf, d.rate);
      const std::array<std::pair<double, double>, 2> pairs{
          {{report.respiration_rates->first, fr.frequency}, {report.respiration_rates->second, fr.frequency}}};
      const auto ea = rate_errors(std::span(pairs.data(), 1));
      const auto eb = rate_errors(std::span(pairs.data() + 1, 1));
      j["truth"] = {{"part", args.truth_part},
                    {"f_truth_hz", fr.frequency},
                    {"a", {{"rho_d_hf", sa.rho}, {"eps_d_hf_m", sa.rmse}, {"eps_RR_hz", ea.rms}, {"rel_eps_RR", ea.relative}}},
                    {"b", {{"rho_d_hf", sb.rho}, {"eps_d_hf_m", sb.rmse}, {"eps_RR_hz", eb.rms}, {"rel_eps_RR", eb.relative}}}};
    });
  }

  stage("write", [&] {
    const auto report_path = common.out / "report.json";
    write_json(report_path, j);
    manifest.output("write", report_path);
    for (const auto& [tag, p] : {std::pair<std::string, const EvaluationProducts*>{"a", &pa}, {"b", &pb}}) {
      const auto img = common.out / ("image_" + tag + ".csv");
      const auto disp = common.out / ("displacement_" + tag + ".csv");
      const auto spec = common.out / ("spectrogram_" + tag + ".csv");
      write_image_csv(img, p->image);
      write_displacement_csv(disp, p->displacement);
      write_spectrogram_csv(spec, p->spectrogram);
      for (const auto& f : {img, disp, spec}) manifest.output("write", f);
      add_plot(manifest, "write",
               heatmap(common.out / ("image_" + tag), {"Radar image " + tag + " (dB)", "azimuth (deg)", "range (m)"},
                       image_slice(p->image), common.plots));
      add_plot(manifest, "write",
               heatmap(common.out / ("spectrogram_" + tag), {"Spectrogram " + tag + " (dB)", "time (s)", "Hz"},
                       spectrogram_grid(p->spectrogram), common.plots));
    }
    const auto t = time_axis(pa.displacement);
    std::vector<Series> series{{"a", t, scaled(pa.displacement.d_hf, 1e3)}, {"b", time_axis(pb.displacement), scaled(pb.displacement.d_hf, 1e3)}};
    if (!truth.empty()) series.push_back({"truth", t, scaled(respiration_highpass(truth, pa.displacement.rate), 1e3)});
    add_plot(manifest, "write",
             line_plot(common.out / "displacement", {"High-pass displacement", "time (s)", "mm"}, series, common.plots));
  });
  manifest.write();
  spdlog::info("evaluate done: {}", common.out.string());
}

// ---- report ----------------------------------------------------------------

void run_report(const ReportArgs& args, const CommonOptions& common) {
  prepare(common);
  RunManifest manifest("report", common.out);
  if (args.reports.empty()) throw StageError("config", exit_validation, "no report files given");

  std::vector<json> reports = stage("load", [&] {
    std::vector<json> out;
    for (const auto& p : args.reports) {
      out.push_back(read_json(p, "metrics report"));
      manifest.input("load", p);
    }
    return out;
  });

  stage("write", [&] {
    auto get = [](const json& j, const char* section, const char* key) -> std::string {
      if (!j.contains(section) || !j.at(section).contains(key)) return "";
      std::ostringstream os;
      os << std::setprecision(8) << j.at(section).at(key).get<double>();
      return os.str();
    };
    auto get_truth = [](const json& j, const char* side, const char* key) -> std::string {
      if (!j.contains("truth")) return "";
      std::ostringstream os;
      os << std::setprecision(8) << j.at("truth").at(side).at(key).get<double>();
      return os.str();
    };
    const auto csv = common.out / "summary.csv";
    std::ofstream os(csv);
    os << "report,rho_I,rho_d,eps_d_m,rho_d_hf,eps_d_hf_m,rho_S,rho_T,lag_s,f_a_hz,f_b_hz,truth_rho_d_hf_a,"
          "truth_rho_d_hf_b\n";
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const auto& j = reports[i];
      os << args.reports[i].string() << ',' << get(j, "image", "rho_I") << ',' << get(j, "displacement", "rho_d")
         << ',' << get(j, "displacement", "eps_d_m") << ',' << get(j, "displacement_hf", "rho_d") << ','
         << get(j, "displacement_hf", "eps_d_m") << ',' << get(j, "spectrogram", "rho_S") << ','
         << get(j, "reference", "rho_T") << ',' << get(j, "reference", "lag_s") << ','
         << get(j, "respiration_rate", "f_a_hz") << ',' << get(j, "respiration_rate", "f_b_hz") << ','
         << get_truth(j, "a", "rho_d_hf") << ',' << get_truth(j, "b", "rho_d_hf") << '\n';
      if (j.contains("respiration_rate"))
        pairs.emplace_back(j.at("respiration_rate").at("f_b_hz").get<double>(),
                           j.at("respiration_rate").at("f_a_hz").get<double>());
    }
    os.close();
    manifest.output("write", csv);
    json summary = {{"reports", reports.size()}};
    if (!pairs.empty()) {
      const auto e = rate_errors(pairs);
      summary["rate_error"] = {{"eps_RR_hz", e.rms}, {"rel_eps_RR", e.relative}, {"pairs", pairs.size()}};
    }
    const auto sj = common.out / "summary.json";
    write_json(sj, summary);
    manifest.output("write", sj);
  });
  manifest.write();
  spdlog::info("report done: {}", common.out.string());
}

}  // namespace rps::cli
