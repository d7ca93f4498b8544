#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "calendar.hpp"
#include "error.hpp"
#include "server.hpp"

namespace trackersync {

using nlohmann::json;

namespace {

constexpr int kStoreVersion = 1;

json totals_to_json(const DayTotals& t) {
  return {{"steps", t.steps},
          {"distance_mm", t.distance_mm},
          {"calories", t.calories},
          {"floors", t.floors},
          {"active_minutes", t.active_minutes}};
}

DayTotals totals_from_json(const json& j) {
  DayTotals t;
  t.steps = j.at("steps").get<std::uint32_t>();
  t.distance_mm = j.at("distance_mm").get<std::uint32_t>();
  t.calories = j.at("calories").get<std::uint32_t>();
  t.floors = j.at("floors").get<std::uint32_t>();
  t.active_minutes = j.at("active_minutes").get<std::uint32_t>();
  return t;
}

}  // namespace

std::map<TrackerId, Account> load_store(const std::string& path) {
  std::map<TrackerId, Account> accounts;
  std::ifstream in(path);
  if (!in) {
    if (!std::filesystem::exists(path)) return accounts;
    throw Error(Errc::CorruptStore, "cannot read store " + path);
  }
  std::ostringstream text;
  text << in.rdbuf();
  try {
    const json doc = json::parse(text.str());
    if (doc.at("version").get<int>() != kStoreVersion) {
      throw Error(Errc::CorruptStore, "unsupported store version");
    }
    for (const auto& a : doc.at("accounts")) {
      Account acct;
      acct.user_id = a.at("user_id").get<std::string>();
      acct.tracker_id = TrackerId::parse(a.at("tracker_id").get<std::string>());
      if (!a.at("device_key").is_null()) {
        acct.device_key = DeviceKey::from_hex(a.at("device_key").get<std::string>());
      }
      acct.fraud_flag = a.at("fraud_flag").get<bool>();
      acct.error_count = a.at("error_count").get<std::uint32_t>();
      if (!a.at("locked_until").is_null()) acct.locked_until = a.at("locked_until").get<std::int64_t>();
      for (const auto& [date, totals] : a.at("daily_log").items()) {
        parse_utc_date(date);
        acct.daily_log[date] = totals_from_json(totals);
      }
      if (!accounts.emplace(acct.tracker_id, std::move(acct)).second) {
        throw Error(Errc::CorruptStore, "duplicate tracker in store");
      }
    }
  } catch (const json::exception& e) {
    throw Error(Errc::CorruptStore, std::string("corrupt store: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::CorruptStore) throw;
    throw Error(Errc::CorruptStore, std::string("corrupt store: ") + e.what());
  }
  return accounts;
}

void save_store(const std::string& path, const std::map<TrackerId, Account>& accounts) {
  json list = json::array();
  for (const auto& [id, a] : accounts) {
    json log = json::object();
    for (const auto& [date, totals] : a.daily_log) log[date] = totals_to_json(totals);
    list.push_back({
        {"user_id", a.user_id},
        {"tracker_id", id.to_string()},
        {"device_key", a.device_key ? json(to_hex(a.device_key->bytes())) : json(nullptr)},
        {"fraud_flag", a.fraud_flag},
        {"error_count", a.error_count},
        {"locked_until", a.locked_until ? json(*a.locked_until) : json(nullptr)},
        {"daily_log", log},
    });
  }
  const json doc = {{"version", kStoreVersion}, {"accounts", list}};

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << doc.dump(2) << '\n';
    out.flush();
    if (!out) throw Error(Errc::Io, "cannot write " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::Io, "cannot replace store " + path + ": " + ec.message());
}

}  // namespace trackersync
