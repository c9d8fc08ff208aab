#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <filesystem>
#include <string>
#include <vector>

#include "momentswap/csv.hpp"
#include "momentswap/error.hpp"

namespace momentswap {

// Key-value configuration with one [section] per module.
class Config {
 public:
  Config() = default;

  static Config load(const std::filesystem::path& path) {
    Config c;
    try {
      boost::property_tree::read_ini(path.string(), c.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ValidationError("config: " + std::string(e.what()));
    }
    return c;
  }

  static Config parse(const std::string& text) {
    Config c;
    std::istringstream in(text);
    try {
      boost::property_tree::read_ini(in, c.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ValidationError("config: " + std::string(e.what()));
    }
    return c;
  }

  bool has(const std::string& section, const std::string& key) const {
    return static_cast<bool>(tree_.get_optional<std::string>(section + "." + key));
  }

  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const {
    return tree_.get<std::string>(section + "." + key, fallback);
  }

  double get(const std::string& section, const std::string& key, double fallback) const {
    if (!has(section, key)) return fallback;
    const auto raw = get(section, key, std::string{});
    try {
      return parse_double(raw);
    } catch (const ValidationError&) {
      throw ValidationError("config: [" + section + "] " + key + " = '" + raw + "' is not a number");
    }
  }

  long get(const std::string& section, const std::string& key, long fallback) const {
    const double v = get(section, key, static_cast<double>(fallback));
    if (v != static_cast<double>(static_cast<long>(v)))
      throw ValidationError("config: [" + section + "] " + key + " must be an integer");
    return static_cast<long>(v);
  }

  bool get_flag(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const auto v = get(section, key, std::string{});
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ValidationError("config: [" + section + "] " + key + " must be yes/no");
  }

  std::vector<std::string> get_list(const std::string& section, const std::string& key,
                                    const std::vector<std::string>& fallback) const {
    if (!has(section, key)) return fallback;
    std::vector<std::string> out;
    for (auto& item : detail::split_line(get(section, key, std::string{}), ','))
      if (!item.empty()) out.push_back(item);
    return out;
  }

  void set(const std::string& section, const std::string& key, const std::string& value) {
    tree_.put(section + "." + key, value);
  }

 private:
  boost::property_tree::ptree tree_;
};

}  // namespace momentswap
