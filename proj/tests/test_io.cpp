#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "csi/io.hpp"

using namespace csi;

namespace {

MeasurementSet random_measurements(std::uint64_t seed, double snr) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1e-3);
  MeasurementSet ms;
  ms.array = uniform_array(3, 5, 6.0, 1.25e8, 7.5);
  ms.data.resize(5, 3);
  for (auto& v : ms.data.reshaped()) v = {g(rng), g(rng)};
  ms.data(0, 0) = {1.0 / 3.0, -2.0 / 7.0};
  ms.data(1, 0) = {5e-320, -0.0};
  ms.snr_db = snr;
  ms.seed = 18446744073709551615ULL;
  ms.synthesis_grid = {7.5, 36};
  return ms;
}

std::string config_text(const ExperimentConfig& c) {
  std::stringstream ss;
  write_config(ss, c);
  return ss.str();
}

}  // namespace

TEST_CASE("algorithm names") {
  CHECK(algorithm_from_string("apasd") == Algorithm::apasd);
  CHECK(algorithm_from_string("nlw") == Algorithm::nlw);
  CHECK(to_string(Algorithm::nlw) == "nlw");
  CHECK_THROWS_AS(algorithm_from_string("cg"), std::invalid_argument);
  CHECK(map_part_from_string("imag") == MapPart::imag);
  CHECK_THROWS_AS(map_part_from_string("phase"), std::invalid_argument);
}

TEST_CASE("experiment presets") {
  const ExperimentConfig c = experiment_preset("coaxial");
  CHECK(c.synthesis.n == 36);
  CHECK(c.inversion.n == 30);
  CHECK(c.array.n_t == 8);
  CHECK(c.array.n_r == 16);
  CHECK(c.frequency == 1.25e8);
  CHECK(c.snr_db == 25.0);
  CHECK(c.solver.alpha == 0.0824);
  CHECK(c.phantom.kind == PhantomKind::coaxial);
  CHECK_FALSE(c.inverse_crime());
  c.validate();

  const ExperimentConfig lossy = experiment_preset("lossy-austria");
  CHECK(lossy.phantom.kind == PhantomKind::austria);
  CHECK(lossy.solver.alpha == 0.0491);
  CHECK(rasterize_phantom(lossy.phantom, lossy.synthesis_grid()).values.imag().cwiseAbs().maxCoeff() > 0.5);
  CHECK(rasterize_phantom(experiment_preset("austria").phantom, c.synthesis_grid()).values.imag().cwiseAbs().maxCoeff() ==
        0.0);
  CHECK_THROWS_AS(experiment_preset("unknown"), std::invalid_argument);
}

TEST_CASE("inverse crime detection") {
  ExperimentConfig c;
  CHECK_FALSE(c.inverse_crime());
  c.synthesis.n = 30;
  CHECK(c.inverse_crime());
  c.synthesis.n = 24;
  CHECK(c.inverse_crime());
  c.synthesis.n = 31;
  CHECK_FALSE(c.inverse_crime());
}

TEST_CASE("config round trip") {
  for (const char* name : {"coaxial", "austria", "lossy-austria"}) {
    ExperimentConfig c = experiment_preset(name);
    c.snr_db = 17.25;
    c.seed = 123456789012345ULL;
    c.algorithm = Algorithm::nlw;
    c.l1 = 0.1 + 0.2;
    c.solver.gamma0 = 1.0 / 3.0;
    c.solver.shrink_first_trial = true;
    c.solver.preconditioner = PreconditionerRule::gradient_balance;
    c.row_weights = {0.75, 3.5};
    c.nlw_step_factor = 0.25;
    const std::string text = config_text(c);
    std::stringstream ss(text);
    const ExperimentConfig back = read_config(ss);
    CHECK(back.preset == name);
    CHECK(back.snr_db == 17.25);
    CHECK(back.seed == c.seed);
    CHECK(back.algorithm == Algorithm::nlw);
    CHECK(*back.l1 == *c.l1);
    CHECK(back.solver.gamma0 == c.solver.gamma0);
    CHECK(back.solver.shrink_first_trial);
    CHECK(back.solver.preconditioner == PreconditionerRule::gradient_balance);
    CHECK(back.row_weights.data == 3.5);
    CHECK(back.phantom.cylinders.size() == c.phantom.cylinders.size());
    CHECK(config_text(back) == text);
  }
}

TEST_CASE("config defaults and infinite SNR") {
  std::stringstream partial(R"({"preset": "austria", "seed": 9, "snr_db": "inf"})");
  const ExperimentConfig c = read_config(partial);
  CHECK(c.solver.alpha == 0.0491);
  CHECK(c.seed == 9);
  CHECK(std::isinf(c.snr_db));
  CHECK_FALSE(c.l1.has_value());
  CHECK(c.row_weights.data == kPresetDataWeight);
  CHECK(config_text(c).find("\"inf\"") != std::string::npos);

  std::stringstream null_snr(R"({"snr_db": null})");
  CHECK(std::isinf(read_config(null_snr).snr_db));
}

TEST_CASE("config errors") {
  std::stringstream broken("{\"preset\": ");
  CHECK_THROWS_AS(read_config(broken), std::invalid_argument);
  std::stringstream preset(R"({"preset": "nope"})");
  CHECK_THROWS_AS(read_config(preset), std::invalid_argument);
  std::stringstream extent(R"({"synthesis_grid": {"extent": 7.0, "n": 36}})");
  CHECK_THROWS_AS(read_config(extent), std::invalid_argument);
  std::stringstream type(R"({"seed": "one"})");
  CHECK_THROWS_AS(read_config(type), std::invalid_argument);
  std::stringstream snr(R"({"snr_db": "loud"})");
  CHECK_THROWS_AS(read_config(snr), std::invalid_argument);
  std::stringstream rule(R"({"solver": {"preconditioner": "jacobi"}})");
  CHECK_THROWS_AS(read_config(rule), std::invalid_argument);
  std::stringstream array(R"({"array": {"radius": 4.0}})");
  CHECK_THROWS_AS(read_config(array), std::invalid_argument);
  CHECK_THROWS_AS(read_config(std::string("/nonexistent/config.json")), std::runtime_error);
}

TEST_CASE("measurement round trip is exact") {
  for (double snr : {25.0, std::numeric_limits<double>::infinity()}) {
    const MeasurementSet ms = random_measurements(3, snr);
    std::stringstream ss;
    write_measurements(ss, ms);
    const std::string text = ss.str();
    const MeasurementSet back = read_measurements(ss);
    CHECK(back.data == ms.data);
    CHECK(std::signbit(back.data(1, 0).imag()));
    CHECK(back.array.frequency == ms.array.frequency);
    CHECK(back.seed == ms.seed);
    CHECK(back.snr_db == ms.snr_db);
    CHECK(back.synthesis_grid.n == 36);
    CHECK(back.synthesis_grid.extent == 7.5);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(back.array.transmitters[i].x == ms.array.transmitters[i].x);
      CHECK(back.array.transmitters[i].y == ms.array.transmitters[i].y);
    }
    std::stringstream again;
    write_measurements(again, back);
    CHECK(again.str() == text);
  }
}

TEST_CASE("measurement schema") {
  const MeasurementSet ms = random_measurements(4, 20.0);
  std::stringstream ss;
  write_measurements(ss, ms);
  const std::string text = ss.str();
  for (const char* key :
       {"\"frequency_hz\"", "\"transmitters\"", "\"receivers\"", "\"snr_db\"", "\"seed\"", "\"data\"",
        "\"synthesis_grid\"", "\"re\"", "\"im\"", "\"extent\"", "\"n\""}) {
    CHECK(text.find(key) != std::string::npos);
  }

  std::stringstream short_data(R"({"frequency_hz": 1e8, "transmitters": [[6, 0]], "receivers": [[0, 6]],
    "snr_db": 10, "seed": 1, "data": [], "synthesis_grid": {"extent": 7.5, "n": 10}})");
  CHECK_THROWS_AS(read_measurements(short_data), std::invalid_argument);
  std::stringstream missing(R"({"frequency_hz": 1e8})");
  CHECK_THROWS_AS(read_measurements(missing), std::invalid_argument);
  std::stringstream bad_point(R"({"frequency_hz": 1e8, "transmitters": [[6]], "receivers": [[0, 6]],
    "snr_db": 10, "seed": 1, "data": [[{"re": 0, "im": 0}]], "synthesis_grid": {"extent": 7.5, "n": 10}})");
  CHECK_THROWS_AS(read_measurements(bad_point), std::invalid_argument);
}

TEST_CASE("PGM rendering") {
  ContrastMap flat(make_grid(1.0, 3));
  flat.values.setConstant(cplx(0.4, 0.0));
  for (auto v : render_pixels(flat, MapPart::real)) CHECK(v == 128);

  ContrastMap m(make_grid(1.0, 2));
  m.values[m.grid.index(1, 1)] = cplx(1.0, -2.0);
  // Row 0 is the top row (iy = 1).
  CHECK(render_pixels(m, MapPart::real) == std::vector<std::uint8_t>{0, 255, 0, 0});
  CHECK(render_pixels(m, MapPart::imag) == std::vector<std::uint8_t>{255, 0, 255, 255});
  CHECK(render_pixels(m, MapPart::abs) == std::vector<std::uint8_t>{0, 255, 0, 0});

  ContrastMap ramp(make_grid(1.0, 3));
  for (int k = 0; k < 9; ++k) ramp.values[k] = static_cast<double>(k);
  const auto px = render_pixels(ramp, MapPart::real);
  CHECK(px[0] == 191);  // ix 0, iy 2 -> 6 / 8
  CHECK(px[8] == 64);   // ix 2, iy 0 -> 2 / 8

  std::stringstream ss;
  write_pgm(ss, m, MapPart::real);
  const std::string bytes = ss.str();
  CHECK(bytes == std::string("P5\n2 2\n255\n") + std::string("\x00\xff\x00\x00", 4));

  ContrastMap empty;
  CHECK_THROWS_AS(render_pixels(empty, MapPart::real), std::invalid_argument);
}

TEST_CASE("prepare_inversion checks the metadata") {
  ExperimentConfig c = experiment_preset("coaxial");
  c.synthesis.n = 12;
  c.inversion.n = 10;
  const MeasurementSet ms = synthesize_experiment(c);
  CHECK(ms.data.rows() == 16);
  CHECK(ms.data.cols() == 8);
  CHECK(ms.synthesis_grid.n == 12);
  CHECK(ms.seed == c.seed);

  const InversionSetup s = prepare_inversion(c, ms);
  CHECK(s.ops.grid.nx == 10);
  CHECK(s.reference.grid.nx == 12);
  CHECK(s.l1 == doctest::Approx(oracle_l1_radius(s.ops, s.reference)).epsilon(1e-14));

  ExperimentConfig explicit_l1 = c;
  explicit_l1.l1 = 3.0;
  CHECK(prepare_inversion(explicit_l1, ms).l1 == 3.0);

  ExperimentConfig other = c;
  other.frequency = 1e8;
  other.phantom.frequency = 1e8;
  CHECK_THROWS_AS(prepare_inversion(other, ms), std::invalid_argument);
  other = c;
  other.synthesis.n = 14;
  CHECK_THROWS_AS(prepare_inversion(other, ms), std::invalid_argument);
  MeasurementSet moved = ms;
  moved.array.receivers[3].x += 0.01;
  CHECK_THROWS_AS(prepare_inversion(c, moved), std::invalid_argument);
}

TEST_CASE("run_inversion dispatches on the algorithm") {
  ExperimentConfig c = experiment_preset("coaxial");
  c.synthesis.n = 12;
  c.inversion.n = 10;
  c.solver.max_iterations = 5;
  const MeasurementSet ms = synthesize_experiment(c);
  const SolveResult a = run_inversion(c, ms);
  CHECK(a.trace.records.size() == 6);
  CHECK(a.trace.records[0].err == 1.0);
  CHECK(a.r > 0.0);

  c.algorithm = Algorithm::nlw;
  const SolveResult n = run_inversion(c, ms, false);
  CHECK(n.trace.records.size() == 6);
  CHECK(std::isnan(n.trace.records[1].err));
  CHECK(n.trace.records[0].gamma > 0.0);
  CHECK(n.trace.records[1].p == 0);
}
