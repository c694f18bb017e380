#include "tmc/booleanizer.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>

namespace tmc::img {

namespace {

struct NamedTechnique {
  Technique technique;
  std::string_view name;
};

constexpr std::array<NamedTechnique, 7> kTechniques = {{
    {Technique::Canny, "canny"},
    {Technique::Hog, "hog"},
    {Technique::AdaptiveGaussian, "adaptive_gaussian"},
    {Technique::AdaptiveMean, "adaptive_mean"},
    {Technique::Otsu, "otsu"},
    {Technique::Thermometer, "thermometer"},
    {Technique::AdaptiveThermometer, "adaptive_thermometer"},
}};

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string fmt(int v) { return std::to_string(v); }

double parse_number(std::string_view key, std::string_view text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::invalid_argument("booleanizer: bad value for '" + std::string(key) + "': " +
                                std::string(text));
  }
  return v;
}

int parse_int(std::string_view key, std::string_view text) {
  const double v = parse_number(key, text);
  if (v != static_cast<int>(v)) {
    throw std::invalid_argument("booleanizer: '" + std::string(key) + "' must be an integer");
  }
  return static_cast<int>(v);
}

class ParamReader {
 public:
  explicit ParamReader(std::string_view text) {
    while (!text.empty()) {
      const auto comma = text.find(',');
      const std::string_view item = text.substr(0, comma);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) {
        throw std::invalid_argument("booleanizer: expected key=value, got '" + std::string(item) + "'");
      }
      values_[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
      if (comma == std::string_view::npos) break;
      text.remove_prefix(comma + 1);
    }
  }

  void read(const char* key, int& out) {
    if (auto it = values_.find(key); it != values_.end()) {
      out = parse_int(key, it->second);
      values_.erase(it);
    }
  }
  void read(const char* key, double& out) {
    if (auto it = values_.find(key); it != values_.end()) {
      out = parse_number(key, it->second);
      values_.erase(it);
    }
  }
  void finish() const {
    if (!values_.empty()) {
      throw std::invalid_argument("booleanizer: unknown parameter '" + values_.begin()->first + "'");
    }
  }

 private:
  std::map<std::string, std::string> values_;
};

void validate(const Booleanizer::Params& params) {
  std::visit(
      [](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, CannyParams>) {
          if (!(p.low < p.high)) throw std::invalid_argument("canny: low must be below high");
          if (!(p.sigma > 0) || p.radius < 0) throw std::invalid_argument("canny: bad smoothing kernel");
        } else if constexpr (std::is_same_v<P, HogParams>) {
          if (p.cell <= 0 || p.block <= 0 || p.bins <= 0) throw std::invalid_argument("hog: bad geometry");
        } else if constexpr (std::is_base_of_v<AdaptiveParams, P>) {
          if (p.block < 3 || p.block % 2 == 0) throw std::invalid_argument("adaptive: block must be odd and >= 3");
        } else if constexpr (std::is_same_v<P, ThermometerParams>) {
          if (p.levels < 1) throw std::invalid_argument("thermometer: levels must be >= 1");
        } else if constexpr (std::is_same_v<P, AdaptiveThermometerParams>) {
          if (p.levels < 2 || p.levels % 2 != 0) {
            throw std::invalid_argument("adaptive_thermometer: levels must be even and >= 2");
          }
          if (!(p.k > 0)) throw std::invalid_argument("adaptive_thermometer: k must be positive");
        }
      },
      params);
}

}  // namespace

std::string_view technique_name(Technique t) {
  for (const auto& e : kTechniques) {
    if (e.technique == t) return e.name;
  }
  return "unknown";
}

std::optional<Technique> technique_from_name(std::string_view name) {
  for (const auto& e : kTechniques) {
    if (e.name == name) return e.technique;
  }
  return std::nullopt;
}

std::optional<Technique> technique_from_id(std::uint8_t id) {
  for (const auto& e : kTechniques) {
    if (static_cast<std::uint8_t>(e.technique) == id) return e.technique;
  }
  return std::nullopt;
}

const std::vector<std::string>& technique_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& e : kTechniques) v.emplace_back(e.name);
    return v;
  }();
  return names;
}

Booleanizer::Booleanizer(Params params) : params_(std::move(params)) { validate(params_); }

Booleanizer Booleanizer::defaults(Technique t) {
  switch (t) {
    case Technique::Canny: return Booleanizer(CannyParams{});
    case Technique::Hog: return Booleanizer(HogParams{});
    case Technique::AdaptiveGaussian: return Booleanizer(AdaptiveGaussianParams{});
    case Technique::AdaptiveMean: return Booleanizer(AdaptiveMeanParams{});
    case Technique::Otsu: return Booleanizer(OtsuParams{});
    case Technique::Thermometer: return Booleanizer(ThermometerParams{});
    case Technique::AdaptiveThermometer: return Booleanizer(AdaptiveThermometerParams{});
  }
  throw std::invalid_argument("unknown technique");
}

Booleanizer Booleanizer::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const auto technique = technique_from_name(name);
  if (!technique) throw std::invalid_argument("unknown technique '" + std::string(name) + "'");
  ParamReader reader(colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1));
  Params params = defaults(*technique).params_;
  std::visit(
      [&](auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, CannyParams>) {
          reader.read("sigma", p.sigma);
          reader.read("radius", p.radius);
          reader.read("low", p.low);
          reader.read("high", p.high);
        } else if constexpr (std::is_same_v<P, HogParams>) {
          reader.read("cell", p.cell);
          reader.read("block", p.block);
          reader.read("bins", p.bins);
          reader.read("epsilon", p.epsilon);
        } else if constexpr (std::is_base_of_v<AdaptiveParams, P>) {
          reader.read("block", p.block);
          reader.read("c", p.c);
        } else if constexpr (std::is_same_v<P, ThermometerParams>) {
          reader.read("levels", p.levels);
        } else if constexpr (std::is_same_v<P, AdaptiveThermometerParams>) {
          reader.read("levels", p.levels);
          reader.read("k", p.k);
        }
      },
      params);
  reader.finish();
  return Booleanizer(std::move(params));
}

Technique Booleanizer::technique() const { return kTechniques[params_.index()].technique; }

std::string Booleanizer::canonical() const {
  std::string out(technique_name(technique()));
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, CannyParams>) {
          out += ":sigma=" + fmt(p.sigma) + ",radius=" + fmt(p.radius) + ",low=" + fmt(p.low) +
                 ",high=" + fmt(p.high);
        } else if constexpr (std::is_same_v<P, HogParams>) {
          out += ":cell=" + fmt(p.cell) + ",block=" + fmt(p.block) + ",bins=" + fmt(p.bins) +
                 ",epsilon=" + fmt(p.epsilon);
        } else if constexpr (std::is_base_of_v<AdaptiveParams, P>) {
          out += ":block=" + fmt(p.block) + ",c=" + fmt(p.c);
        } else if constexpr (std::is_same_v<P, ThermometerParams>) {
          out += ":levels=" + fmt(p.levels);
        } else if constexpr (std::is_same_v<P, AdaptiveThermometerParams>) {
          out += ":levels=" + fmt(p.levels) + ",k=" + fmt(p.k);
        }
      },
      params_);
  return out;
}

std::uint64_t Booleanizer::digest() const { return fnv1a64(canonical()); }

BitPlaneStack Booleanizer::apply(const RgbImage& img) const {
  return std::visit(
      [&](const auto& p) -> BitPlaneStack {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, CannyParams>) {
          return canny(img, p);
        } else if constexpr (std::is_same_v<P, HogParams>) {
          return hog_booleanize(hog_features(img, p));
        } else if constexpr (std::is_same_v<P, AdaptiveGaussianParams>) {
          return adaptive_gaussian(img, p);
        } else if constexpr (std::is_same_v<P, AdaptiveMeanParams>) {
          return adaptive_mean(img, p);
        } else if constexpr (std::is_same_v<P, OtsuParams>) {
          return otsu(img);
        } else if constexpr (std::is_same_v<P, ThermometerParams>) {
          return thermometer_encode(img, p.levels);
        } else {
          return adaptive_thermometer_encode(img, p.levels, p.k);
        }
      },
      params_);
}

std::array<int, 3> Booleanizer::output_shape(int height, int width) const {
  return std::visit(
      [&](const auto& p) -> std::array<int, 3> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, HogParams>) {
          const int by = height / p.cell - p.block + 1;
          const int bx = width / p.cell - p.block + 1;
          return {1, 1, by * bx * p.block * p.block * p.bins};
        } else if constexpr (std::is_same_v<P, ThermometerParams> ||
                             std::is_same_v<P, AdaptiveThermometerParams>) {
          return {height, width, 3 * p.levels};
        } else {
          return {height, width, 3};
        }
      },
      params_);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace tmc::img
