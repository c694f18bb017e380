#include <algorithm>
#include <bit>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "tmc/binary_io.hpp"
#include "tmc/composite.hpp"
#include "tmc/parallel.hpp"

namespace tmc::composite {

using boost::multiprecision::cpp_int;

ClassSumMatrix::ClassSumMatrix(int specialist_id, int rows, int cols, std::vector<std::int32_t> values)
    : specialist(specialist_id), inputs(rows), classes(cols), sums(std::move(values)) {
  if (rows < 0 || cols < 0 || sums.size() != static_cast<std::size_t>(rows) * cols) {
    throw std::invalid_argument("ClassSumMatrix: shape does not match the value count");
  }
}

double normalization_constant(const ClassSumMatrix& m) {
  if (m.empty()) throw std::invalid_argument("normalization_constant: empty matrix");
  const auto [lo, hi] = std::minmax_element(m.sums.begin(), m.sums.end());
  const double alpha = static_cast<double>(*hi) - static_cast<double>(*lo);
  return alpha == 0.0 ? 1.0 : alpha;
}

std::vector<int> composite_predict(std::span<const ClassSumMatrix> matrices, std::span<const double> alphas) {
  if (matrices.empty()) throw std::invalid_argument("composite_predict: no specialists");
  if (alphas.size() != matrices.size()) throw std::invalid_argument("composite_predict: one alpha per specialist");
  const int inputs = matrices[0].inputs;
  const int classes = matrices[0].classes;
  for (std::size_t t = 0; t < matrices.size(); ++t) {
    if (matrices[t].inputs != inputs || matrices[t].classes != classes) {
      throw std::invalid_argument("composite_predict: class-sum matrices differ in shape");
    }
    if (!(alphas[t] > 0.0) || !std::isfinite(alphas[t])) {
      throw std::invalid_argument("composite_predict: alpha must be positive and finite");
    }
  }
  // Every alpha is a double, so alpha_t = a_t * 2^e_t with a_t odd. Scaling
  // all terms by lcm(a) * 2^max(e) turns sum_t c_t / alpha_t into an integer
  // dot product with exact per-specialist multipliers.
  std::vector<cpp_int> odd(matrices.size());
  std::vector<int> exponent(matrices.size());
  cpp_int lcm = 1;
  int top = std::numeric_limits<int>::min();
  for (std::size_t t = 0; t < matrices.size(); ++t) {
    int e = 0;
    const double mantissa = std::frexp(alphas[t], &e);
    auto a = static_cast<std::uint64_t>(std::ldexp(mantissa, 53));
    e -= 53;
    const int zeros = std::countr_zero(a);
    a >>= zeros;
    e += zeros;
    odd[t] = a;
    exponent[t] = e;
    lcm = boost::multiprecision::lcm(lcm, odd[t]);
    top = std::max(top, e);
  }
  std::vector<cpp_int> multiplier(matrices.size());
  for (std::size_t t = 0; t < matrices.size(); ++t) {
    multiplier[t] = (lcm / odd[t]) << (top - exponent[t]);
  }

  std::vector<int> out(inputs);
  cpp_int best;
  cpp_int value;
  for (int f = 0; f < inputs; ++f) {
    int arg = 0;
    for (int i = 0; i < classes; ++i) {
      value = 0;
      for (std::size_t t = 0; t < matrices.size(); ++t) value += multiplier[t] * matrices[t].at(f, i);
      if (i == 0 || value > best) {
        arg = i;
        best = value;
      }
    }
    out[f] = arg;
  }
  return out;
}

std::vector<int> composite_predict(std::span<const ClassSumMatrix> matrices) {
  std::vector<double> alphas;
  alphas.reserve(matrices.size());
  for (const auto& m : matrices) alphas.push_back(normalization_constant(m));
  return composite_predict(matrices, alphas);
}

ClassSumMatrix specialist_class_sums(const tm::SpecialistModel& model, std::span<const img::BitPlaneStack> stacks,
                                     int specialist_id, int jobs) {
  if (stacks.empty()) throw std::invalid_argument("specialist_class_sums: empty batch");
  const int m = model.classes();
  std::vector<std::int32_t> sums(stacks.size() * m);
  parallel_for(stacks.size(), jobs, [&](std::size_t f) {
    const auto x = model.patches(stacks[f]);
    for (int i = 0; i < m; ++i) sums[f * m + i] = model.class_sum(x, i);
  });
  return ClassSumMatrix(specialist_id, static_cast<int>(stacks.size()), m, std::move(sums));
}

ClassSumMatrix specialist_class_sums(const tm::SpecialistModel& model, std::span<const img::RgbImage> images,
                                     int specialist_id, int jobs) {
  if (images.empty()) throw std::invalid_argument("specialist_class_sums: empty batch");
  const int m = model.classes();
  std::vector<std::int32_t> sums(images.size() * m);
  parallel_for(images.size(), jobs, [&](std::size_t f) {
    const auto x = model.patches(model.binding().apply(images[f]));
    for (int i = 0; i < m; ++i) sums[f * m + i] = model.class_sum(x, i);
  });
  return ClassSumMatrix(specialist_id, static_cast<int>(images.size()), m, std::move(sums));
}

void CompositeModel::add_specialist(tm::SpecialistModel model, std::optional<double> frozen_alpha) {
  if (!members_.empty() && model.classes() != classes_) {
    throw std::invalid_argument("add_specialist: member has " + std::to_string(model.classes()) +
                                " classes, composite has " + std::to_string(classes_));
  }
  if (frozen_alpha && !(*frozen_alpha > 0.0)) throw std::invalid_argument("add_specialist: alpha must be positive");
  classes_ = model.classes();
  members_.push_back({std::move(model), frozen_alpha});
}

void CompositeModel::remove_specialist(int index) {
  if (index < 0 || index >= size()) throw std::out_of_range("remove_specialist: no such member");
  members_.erase(members_.begin() + index);
  if (members_.empty()) classes_ = 0;
}

std::vector<ClassSumMatrix> CompositeModel::class_sums(std::span<const img::RgbImage> images, int jobs) const {
  std::vector<ClassSumMatrix> out;
  out.reserve(members_.size());
  for (std::size_t t = 0; t < members_.size(); ++t) {
    out.push_back(specialist_class_sums(members_[t].model, images, static_cast<int>(t), jobs));
  }
  return out;
}

std::vector<double> CompositeModel::alphas(std::span<const ClassSumMatrix> matrices) const {
  if (matrices.size() != members_.size()) throw std::invalid_argument("alphas: one matrix per member");
  std::vector<double> out;
  for (std::size_t t = 0; t < members_.size(); ++t) {
    out.push_back(members_[t].frozen_alpha.value_or(normalization_constant(matrices[t])));
  }
  return out;
}

std::vector<int> CompositeModel::predict(std::span<const img::RgbImage> images, int jobs) const {
  if (members_.empty()) throw std::invalid_argument("predict: composite has no members");
  const auto mats = class_sums(images, jobs);
  return composite_predict(mats, alphas(mats));
}

void CompositeModel::freeze_alphas(std::span<const img::RgbImage> calibration, int jobs) {
  const auto mats = class_sums(calibration, jobs);
  for (std::size_t t = 0; t < members_.size(); ++t) members_[t].frozen_alpha = normalization_constant(mats[t]);
}

CompositeModel add_specialist(CompositeModel comp, tm::SpecialistModel model) {
  comp.add_specialist(std::move(model));
  return comp;
}

std::vector<std::uint8_t> encode_class_sums(const ClassSumMatrix& m) {
  io::ByteWriter w;
  w.text("TMCS");
  w.u32(static_cast<std::uint32_t>(m.specialist));
  w.u32(static_cast<std::uint32_t>(m.inputs));
  w.u32(static_cast<std::uint32_t>(m.classes));
  for (auto v : m.sums) w.i32(v);
  return w.take();
}

ClassSumMatrix decode_class_sums(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.text(4) != "TMCS") throw std::runtime_error("not a TMCS class-sum file");
  const int t = static_cast<int>(r.u32());
  const std::uint32_t f = r.u32();
  const std::uint32_t m = r.u32();
  if (r.remaining() != static_cast<std::size_t>(f) * m * 4) throw std::runtime_error("TMCS: payload size mismatch");
  std::vector<std::int32_t> sums(static_cast<std::size_t>(f) * m);
  for (auto& v : sums) v = r.i32();
  return ClassSumMatrix(t, static_cast<int>(f), static_cast<int>(m), std::move(sums));
}

}  // namespace tmc::composite
