#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tmc/binary_io.hpp"
#include "tmc/composite.hpp"

namespace tmc::composite {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

std::string format_manifest(const Manifest& m) {
  std::ostringstream out;
  out << "# tmc composite manifest\n";
  out << "classes=";
  for (std::size_t i = 0; i < m.class_labels.size(); ++i) out << (i ? "," : "") << m.class_labels[i];
  out << '\n';
  for (const auto& mem : m.members) {
    out << "member=" << mem.model.generic_string() << '\n';
    out << "binding=" << mem.binding << '\n';
    if (mem.alpha) out << "alpha=" << format_double(*mem.alpha) << '\n';
  }
  return out.str();
}

Manifest parse_manifest(std::string_view text) {
  Manifest m;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::runtime_error("manifest line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key == "classes") {
      m.class_labels.clear();
      std::string_view rest = value;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        m.class_labels.emplace_back(trim(rest.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
    } else if (key == "member") {
      m.members.push_back({std::filesystem::path(std::string(value)), {}, std::nullopt});
    } else if (key == "binding" || key == "alpha") {
      if (m.members.empty()) {
        throw std::runtime_error("manifest line " + std::to_string(line_no) + ": " + std::string(key) +
                                 " before any member");
      }
      if (key == "binding") {
        m.members.back().binding = std::string(value);
      } else {
        double a = 0.0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), a);
        if (ec != std::errc{} || ptr != value.data() + value.size() || !(a > 0.0)) {
          throw std::runtime_error("manifest line " + std::to_string(line_no) + ": bad alpha");
        }
        m.members.back().alpha = a;
      }
    } else {
      throw std::runtime_error("manifest line " + std::to_string(line_no) + ": unknown key '" +
                               std::string(key) + "'");
    }
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  const std::string text = format_manifest(m);
  io::write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Manifest read_manifest(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return parse_manifest(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

CompositeModel load_composite(const Manifest& m, const std::filesystem::path& base) {
  CompositeModel comp;
  for (const auto& mem : m.members) {
    const auto path = mem.model.is_absolute() ? mem.model : base / mem.model;
    auto model = tm::SpecialistModel::load(path);
    if (!mem.binding.empty() && img::Booleanizer::parse(mem.binding) != model.binding()) {
      throw std::runtime_error("manifest binding '" + mem.binding + "' does not match " + path.string());
    }
    comp.add_specialist(std::move(model), mem.alpha);
  }
  return comp;
}

}  // namespace tmc::composite
