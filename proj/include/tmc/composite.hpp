#pragma once

// Fusion of independently trained specialists: every member's class sums
// are divided by the member's spread alpha (max - min over the evaluated
// inputs and classes) and summed; the composite predicts the argmax.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tmc/imgproc.hpp"
#include "tmc/tm.hpp"

namespace tmc::composite {

/// Class sums of one specialist, row-major over (input, class).
struct ClassSumMatrix {
  int specialist = 0;
  int inputs = 0;
  int classes = 0;
  std::vector<std::int32_t> sums;

  ClassSumMatrix() = default;
  ClassSumMatrix(int specialist_id, int rows, int cols, std::vector<std::int32_t> values);

  std::int32_t at(int f, int i) const { return sums[static_cast<std::size_t>(f) * classes + i]; }
  bool empty() const { return sums.empty(); }

  bool operator==(const ClassSumMatrix&) const = default;
};

/// max - min over all entries; 1 when every entry is equal.
/// Throws std::invalid_argument on an empty matrix.
double normalization_constant(const ClassSumMatrix& m);

/// argmax_i sum_t c[t](f, i) / alpha[t] per input f, ties to the lowest class.
/// The sums are compared exactly, as rationals, so the result does not depend
/// on specialist order or on floating-point rounding.
std::vector<int> composite_predict(std::span<const ClassSumMatrix> matrices, std::span<const double> alphas);

/// Convenience form computing each alpha from its own matrix.
std::vector<int> composite_predict(std::span<const ClassSumMatrix> matrices);

ClassSumMatrix specialist_class_sums(const tm::SpecialistModel& model, std::span<const img::RgbImage> images,
                                     int specialist_id = 0, int jobs = 1);
ClassSumMatrix specialist_class_sums(const tm::SpecialistModel& model, std::span<const img::BitPlaneStack> stacks,
                                     int specialist_id = 0, int jobs = 1);

struct Member {
  tm::SpecialistModel model;
  std::optional<double> frozen_alpha;
};

class CompositeModel {
 public:
  int classes() const { return classes_; }
  int size() const { return static_cast<int>(members_.size()); }
  const std::vector<Member>& members() const { return members_; }

  /// Throws std::invalid_argument when the class count differs from existing members.
  void add_specialist(tm::SpecialistModel model, std::optional<double> frozen_alpha = std::nullopt);
  void remove_specialist(int index);

  /// One matrix per member over the batch.
  std::vector<ClassSumMatrix> class_sums(std::span<const img::RgbImage> images, int jobs = 1) const;

  /// Alphas for these matrices: frozen values where present, batch spread otherwise.
  std::vector<double> alphas(std::span<const ClassSumMatrix> matrices) const;

  std::vector<int> predict(std::span<const img::RgbImage> images, int jobs = 1) const;

  /// Freezes every member's alpha from a calibration batch, so that single
  /// inputs can be classified independently of the batch they arrive in.
  void freeze_alphas(std::span<const img::RgbImage> calibration, int jobs = 1);

 private:
  int classes_ = 0;
  std::vector<Member> members_;
};

CompositeModel add_specialist(CompositeModel comp, tm::SpecialistModel model);

// ---------------------------------------------------------------------------
// Files

/// {"TMCS", u32 specialist, u32 F, u32 m, F*m i32}, little-endian.
std::vector<std::uint8_t> encode_class_sums(const ClassSumMatrix& m);
ClassSumMatrix decode_class_sums(std::span<const std::uint8_t> bytes);

/// Line-oriented key=value composite description:
///   classes=airplane,automobile
///   member=<model path>
///   binding=<booleanizer canonical text>
///   alpha=<frozen alpha>            (optional)
/// binding and alpha apply to the most recent member line.
struct ManifestMember {
  std::filesystem::path model;
  std::string binding;
  std::optional<double> alpha;
};

struct Manifest {
  std::vector<std::string> class_labels;
  std::vector<ManifestMember> members;
};

std::string format_manifest(const Manifest& m);
Manifest parse_manifest(std::string_view text);
void write_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& path);

/// Loads every member model (paths relative to `base`) and checks each
/// binding against the model file.
CompositeModel load_composite(const Manifest& m, const std::filesystem::path& base = {});

}  // namespace tmc::composite
