#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "custodian/ledger.hpp"
#include "custodian/model.hpp"
#include "custodian/plugins.hpp"
#include "custodian/reports.hpp"

namespace custodian::codec {

using nlohmann::json;

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);  // INVALID_ARGUMENT on bad input

json to_json(const Principal& p);
json to_json(const Case& c);
json to_json(const EvidenceItem& e);
json to_json(const Note& n);
json to_json(const CustodyEvent& e);
json to_json(const ReportSections& s);
json to_json(const AccessControlEntry& a);
json to_json(const DefaultRightsPolicy& p);
json to_json(const ChainStatus& s);
json to_json(const ToolInvocation& inv);
json to_json(const BatchReport& r);
json to_json(const StoredReport& r);

template <class T>
json to_json(const std::vector<T>& items) {
  json arr = json::array();
  for (const auto& i : items) arr.push_back(to_json(i));
  return arr;
}

}  // namespace custodian::codec
