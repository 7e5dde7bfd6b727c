#pragma once

// Model builders and the shipped demo zoo.
//
// Builders take explicit ingredient tables, validate them, and return a
// finished Model.  The demo recipes are concrete constructions whose exact
// context statistics are frozen as golden numbers (see recipes/golden/):
//
//   demo_eq3           ternary-outcome product model whose coincidence
//                      post-selection produces S_max = 36/13 > 2 while the
//                      raw (zero-counting) statistics stay deep inside the
//                      local bound
//   demo_eq3_disjoint  the same four-atom construction without the noise
//                      atom: settings have pairwise disjoint detection
//                      regions, post-selected correlations saturate S = 4
//   demo_eq5           correlated-instrument model (one joint instrument
//                      distribution per context, all outcomes ±1) with
//                      S_max = 3 and no post-selection anywhere
//   demo_timetag       local ±1 model plus setting-dependent detection
//                      delays; narrow coincidence windows reproduce the
//                      demo_eq3 statistics, wide windows are plainly local
//   saturating_mixture deterministic mixture with exact S = 2, used to study
//                      how often finite samples land at or above the bound

#include "bell/model.hpp"

#include <functional>

namespace bell {

Model build_deterministic_local(std::string id, ProbTable source,
                                std::array<std::vector<std::int8_t>, 2> a_table,
                                std::array<std::vector<std::int8_t>, 2> b_table);

// Response probabilities P(+1 | setting, label), realized exactly by giving
// each setting an instrument space of size lcm(denominators) with uniform
// weights.  Rejects probability grids whose lcm exceeds 2^20.
Model build_stochastic_local(std::string id, ProbTable source,
                             std::array<std::vector<BigQ>, 2> pa_plus,
                             std::array<std::vector<BigQ>, 2> pb_plus);

Model build_contextual_product(std::string id, ProbTable source,
                               std::array<ProbTable, 4> instr,
                               std::array<std::vector<std::int8_t>, 2> a_table,
                               std::array<std::vector<std::int8_t>, 2> b_table);

Model build_contextual_correlated(std::string id, ProbTable source,
                                  std::array<std::size_t, 4> instr_n,
                                  std::array<ProbTable, 4> instr_joint,
                                  std::array<std::vector<std::int8_t>, 2> a_table,
                                  std::array<std::vector<std::int8_t>, 2> b_table);

Model build_timetag_model(std::string id, ProbTable source,
                          std::array<ProbTable, 4> instr,
                          std::array<std::vector<std::int8_t>, 2> a_table,
                          std::array<std::vector<std::int8_t>, 2> b_table,
                          std::array<std::vector<double>, 2> a_delay,
                          std::array<std::vector<double>, 2> b_delay);

// Reinterprets a product-type model (deterministic/stochastic local or
// contextual product) as one that reveals all four outcomes per emission.
Model build_coupling(const Model& base, std::string id = "");

// Correlated-instrument family parameterized by polarizer angles.  Each
// context's joint instrument table is
//   p(i, j) = (1 + (-1)^{i+j} g(cos(theta_b - theta_a))) / 4,
// so the context correlation equals g(cos of the relative angle) and depends
// on the two angles only through their difference.  g must map into [-1, 1].
Model build_angle_correlated(std::string id,
                             std::array<double, 4> angles /* ax, axp, by, byp */,
                             const std::function<double(double)>& g_of_cos);

// g(c) = 1 - 2c^2, i.e. correlation -cos(2*theta): the singlet-state photon
// correlation, the natural companion of Malus-law intensity cos^2(theta).
double malus_correlation(double cos_theta);

// Reference values from quantum mechanics, computed independently of any
// Model machinery: singlet correlation -cos(2(alpha-beta)) and the four
// context correlations at the CHSH-optimal angles (0, pi/4; pi/8, 3pi/8),
// where S_max = 2*sqrt(2).
double quantum_singlet_correlation(double alpha, double beta);
std::array<double, 4> quantum_optimal_correlations();

// The contextual_product model a time-tag model turns into when a centered
// coincidence window of the given width is applied: outcomes whose delay
// exceeds window/2 become non-detections.  This is the exact no-sampling
// description of epoch-anchored matching, valid while every delay stays
// below both window spacing - window/2 and spacing/2 (checked).
Model windowed_model(const Model& time_tag, double window, double spacing);

// Shipped demos.
Model demo_eq3_model();
Model demo_eq3_disjoint_model();
Model demo_eq5_model();
Model demo_timetag_model();
Model saturating_mixture_model();
// Delay spacing and the window list shipped with demo_timetag.
double demo_timetag_spacing();
std::vector<double> demo_timetag_windows();

// Randomized recipes for property tests.  Hidden spaces have 1..4 labels,
// weights are small integer grids normalized exactly.
Model random_deterministic_local(std::uint64_t seed);
Model random_stochastic_local(std::uint64_t seed);
// Random contextual product; with allow_zero = false all outcomes are ±1.
Model random_contextual_product(std::uint64_t seed, bool allow_zero);

}  // namespace bell
