#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "guarnet/csv.hpp"
#include "guarnet/date.hpp"

namespace guarnet {

// Money is integer minor units throughout; aggregates stay drift-free.
using Money = std::int64_t;

// Raised for unreadable or malformed input data; the CLI maps it to exit 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EnterpriseScale { micro, small, medium, large };

inline std::string to_string(EnterpriseScale s) {
  switch (s) {
    case EnterpriseScale::micro: return "micro";
    case EnterpriseScale::small: return "small";
    case EnterpriseScale::medium: return "medium";
    case EnterpriseScale::large: return "large";
  }
  return "?";
}

inline EnterpriseScale parse_scale(const std::string& s) {
  if (s == "micro") return EnterpriseScale::micro;
  if (s == "small") return EnterpriseScale::small;
  if (s == "medium") return EnterpriseScale::medium;
  if (s == "large") return EnterpriseScale::large;
  throw std::invalid_argument("unknown enterprise_scale '" + s + "'");
}

struct Customer {
  std::string customer_id;
  std::string business_nature;
  Money registered_capital = 0;
  EnterpriseScale enterprise_scale = EnterpriseScale::small;
  std::int64_t employee_count = 0;
  Date registration_date;
};

struct Contract {
  std::string contract_id;
  std::string borrower_id;
  Money loan_amount = 0;
  Date start_date;
  int term_months = 0;
  std::string capital_return_type;
  std::string interest_return_type;

  Date maturity() const { return add_months(start_date, term_months); }
};

struct Guarantee {
  std::string contract_id;
  std::string guarantor_id;
  Money guarantee_amount = 0;
  Date signed_date;
};

struct Repayment {
  std::string contract_id;
  Date due_date;
  Money amount_due = 0;
  std::optional<Date> paid_date;
  Money amount_paid = 0;

  // Zero grace period: any late payment is a default.
  bool default_flag() const { return !paid_date.has_value() || *paid_date > due_date; }
};

struct LoanDataset {
  std::vector<Customer> customers;
  std::vector<Contract> contracts;
  std::vector<Guarantee> guarantees;
  std::vector<Repayment> repayments;
};

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  std::string locator;  // e.g. "contracts[3] id=K004"
  std::string rule;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }

  std::string summary() const {
    std::string s;
    for (const auto& v : violations) s += v.locator + ": " + v.rule + "\n";
    return s;
  }
};

namespace detail {

template <typename T>
std::unordered_map<std::string, std::size_t> index_by_id(const std::vector<T>& items,
                                                         std::string T::*field) {
  std::unordered_map<std::string, std::size_t> idx;
  idx.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) idx.emplace(items[i].*field, i);
  return idx;
}

}  // namespace detail

// Lists every invariant violation with a record locator. Violations are data,
// not failures: an invalid dataset still loads.
inline ValidationReport validate(const LoanDataset& ds) {
  ValidationReport report;
  auto add = [&](std::string locator, std::string rule) {
    report.violations.push_back({std::move(locator), std::move(rule)});
  };

  std::unordered_map<std::string, std::size_t> customer_idx;
  for (std::size_t i = 0; i < ds.customers.size(); ++i) {
    const auto& c = ds.customers[i];
    std::string loc = "customers[" + std::to_string(i) + "] id=" + c.customer_id;
    if (!customer_idx.emplace(c.customer_id, i).second) add(loc, "customer_id unique");
    if (c.registered_capital < 0) add(loc, "registered_capital >= 0");
    if (c.employee_count < 0) add(loc, "employee_count >= 0");
  }

  std::unordered_map<std::string, std::size_t> contract_idx;
  for (std::size_t i = 0; i < ds.contracts.size(); ++i) {
    const auto& k = ds.contracts[i];
    std::string loc = "contracts[" + std::to_string(i) + "] id=" + k.contract_id;
    if (!contract_idx.emplace(k.contract_id, i).second) add(loc, "contract_id unique");
    if (k.loan_amount <= 0) add(loc, "loan_amount > 0");
    if (k.term_months < 1) add(loc, "term_months >= 1");
    auto it = customer_idx.find(k.borrower_id);
    if (it == customer_idx.end()) {
      add(loc, "borrower_id resolves");
    } else if (ds.customers[it->second].registration_date > k.start_date) {
      add(loc, "registration_date <= contract start_date");
    }
  }

  for (std::size_t i = 0; i < ds.guarantees.size(); ++i) {
    const auto& g = ds.guarantees[i];
    std::string loc = "guarantees[" + std::to_string(i) + "] contract=" + g.contract_id;
    auto kit = contract_idx.find(g.contract_id);
    if (kit == contract_idx.end()) {
      add(loc, "contract_id resolves");
      continue;
    }
    const auto& k = ds.contracts[kit->second];
    if (!customer_idx.count(g.guarantor_id)) add(loc, "guarantor_id resolves");
    if (g.guarantor_id == k.borrower_id) add(loc, "self-guarantee");
    if (g.signed_date > k.start_date) add(loc, "signed_date <= contract start_date");
  }

  for (std::size_t i = 0; i < ds.repayments.size(); ++i) {
    const auto& r = ds.repayments[i];
    std::string loc = "repayments[" + std::to_string(i) + "] contract=" + r.contract_id;
    auto kit = contract_idx.find(r.contract_id);
    if (kit == contract_idx.end()) {
      add(loc, "contract_id resolves");
      continue;
    }
    const auto& k = ds.contracts[kit->second];
    if (r.due_date < k.start_date || r.due_date > k.maturity())
      add(loc, "due_date within [start_date, start_date + term_months]");
    if (r.amount_due < 0) add(loc, "amount_due >= 0");
  }

  return report;
}

// ---------------------------------------------------------------------------
// Loading / saving

struct TablePaths {
  std::string customers;
  std::string contracts;
  std::string guarantees;
  std::string repayments;

  static TablePaths in_dir(const std::string& dir) {
    auto join = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };
    return {join("customers.csv"), join("contracts.csv"), join("guarantees.csv"),
            join("repayments.csv")};
  }
};

namespace detail {

inline void expect_header(const csv::Table& t, const std::vector<std::string>& expected,
                          const std::string& path) {
  if (t.header != expected) {
    std::string want;
    for (std::size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + expected[i];
    throw DataError(path + ": unexpected header (want " + want + ")");
  }
}

inline void expect_fields(const csv::Row& row, std::size_t n, const std::string& path) {
  if (row.fields.size() != n)
    throw DataError(path + ":" + std::to_string(row.line) + ": expected " + std::to_string(n) +
                    " fields, got " + std::to_string(row.fields.size()));
}

template <typename F>
auto parse_field(const csv::Row& row, std::size_t col, const std::string& path, F&& parse) {
  try {
    return parse(row.fields[col]);
  } catch (const std::exception& e) {
    throw DataError(path + ":" + std::to_string(row.line) + ":column " + std::to_string(col + 1) +
                    ": " + e.what());
  }
}

inline std::int64_t parse_int(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("empty integer field");
  std::size_t pos = 0;
  long long v = std::stoll(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("trailing characters in integer '" + s + "'");
  return v;
}

}  // namespace detail

inline const std::vector<std::string> kCustomersHeader = {
    "customer_id", "business_nature", "registered_capital",
    "enterprise_scale", "employee_count", "registration_date"};
inline const std::vector<std::string> kContractsHeader = {
    "contract_id", "borrower_id", "loan_amount", "start_date",
    "term_months", "capital_return_type", "interest_return_type"};
inline const std::vector<std::string> kGuaranteesHeader = {
    "contract_id", "guarantor_id", "guarantee_amount", "signed_date"};
inline const std::vector<std::string> kRepaymentsHeader = {
    "contract_id", "due_date", "amount_due", "paid_date", "amount_paid"};

// Loads the four CSV tables. Throws DataError naming file, line and column on
// malformed rows and on duplicate primary keys. Row order is preserved.
inline LoanDataset load_tables(const TablePaths& paths) {
  using namespace detail;
  LoanDataset ds;

  {
    auto t = csv::read_file(paths.customers);
    expect_header(t, kCustomersHeader, paths.customers);
    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& row : t.rows) {
      expect_fields(row, 6, paths.customers);
      Customer c;
      c.customer_id = row.fields[0];
      c.business_nature = row.fields[1];
      c.registered_capital = parse_field(row, 2, paths.customers, parse_int);
      c.enterprise_scale = parse_field(row, 3, paths.customers,
                                       [](const std::string& s) { return parse_scale(s); });
      c.employee_count = parse_field(row, 4, paths.customers, parse_int);
      c.registration_date = parse_field(row, 5, paths.customers,
                                        [](const std::string& s) { return parse_date(s); });
      if (!seen.emplace(c.customer_id, row.line).second)
        throw DataError(paths.customers + ":" + std::to_string(row.line) +
                        ": duplicate customer_id '" + c.customer_id + "'");
      ds.customers.push_back(std::move(c));
    }
  }

  {
    auto t = csv::read_file(paths.contracts);
    expect_header(t, kContractsHeader, paths.contracts);
    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& row : t.rows) {
      expect_fields(row, 7, paths.contracts);
      Contract k;
      k.contract_id = row.fields[0];
      k.borrower_id = row.fields[1];
      k.loan_amount = parse_field(row, 2, paths.contracts, parse_int);
      k.start_date = parse_field(row, 3, paths.contracts,
                                 [](const std::string& s) { return parse_date(s); });
      k.term_months = static_cast<int>(parse_field(row, 4, paths.contracts, parse_int));
      k.capital_return_type = row.fields[5];
      k.interest_return_type = row.fields[6];
      if (!seen.emplace(k.contract_id, row.line).second)
        throw DataError(paths.contracts + ":" + std::to_string(row.line) +
                        ": duplicate contract_id '" + k.contract_id + "'");
      ds.contracts.push_back(std::move(k));
    }
  }

  {
    auto t = csv::read_file(paths.guarantees);
    expect_header(t, kGuaranteesHeader, paths.guarantees);
    for (const auto& row : t.rows) {
      expect_fields(row, 4, paths.guarantees);
      Guarantee g;
      g.contract_id = row.fields[0];
      g.guarantor_id = row.fields[1];
      g.guarantee_amount = parse_field(row, 2, paths.guarantees, parse_int);
      g.signed_date = parse_field(row, 3, paths.guarantees,
                                  [](const std::string& s) { return parse_date(s); });
      ds.guarantees.push_back(std::move(g));
    }
  }

  {
    auto t = csv::read_file(paths.repayments);
    expect_header(t, kRepaymentsHeader, paths.repayments);
    for (const auto& row : t.rows) {
      expect_fields(row, 5, paths.repayments);
      Repayment r;
      r.contract_id = row.fields[0];
      r.due_date = parse_field(row, 1, paths.repayments,
                               [](const std::string& s) { return parse_date(s); });
      r.amount_due = parse_field(row, 2, paths.repayments, parse_int);
      if (!row.fields[3].empty())  // empty paid_date means unpaid
        r.paid_date = parse_field(row, 3, paths.repayments,
                                  [](const std::string& s) { return parse_date(s); });
      r.amount_paid = parse_field(row, 4, paths.repayments, parse_int);
      ds.repayments.push_back(std::move(r));
    }
  }

  return ds;
}

// Writes the canonical CSV form; load_tables(save_tables(ds)) round-trips
// bit-identically.
inline void save_tables(const LoanDataset& ds, const TablePaths& paths) {
  auto open = [](const std::string& path) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    return out;
  };

  {
    auto out = open(paths.customers);
    csv::write_row(out, kCustomersHeader);
    for (const auto& c : ds.customers)
      csv::write_row(out, {c.customer_id, c.business_nature, std::to_string(c.registered_capital),
                           to_string(c.enterprise_scale), std::to_string(c.employee_count),
                           to_string(c.registration_date)});
  }
  {
    auto out = open(paths.contracts);
    csv::write_row(out, kContractsHeader);
    for (const auto& k : ds.contracts)
      csv::write_row(out, {k.contract_id, k.borrower_id, std::to_string(k.loan_amount),
                           to_string(k.start_date), std::to_string(k.term_months),
                           k.capital_return_type, k.interest_return_type});
  }
  {
    auto out = open(paths.guarantees);
    csv::write_row(out, kGuaranteesHeader);
    for (const auto& g : ds.guarantees)
      csv::write_row(out, {g.contract_id, g.guarantor_id, std::to_string(g.guarantee_amount),
                           to_string(g.signed_date)});
  }
  {
    auto out = open(paths.repayments);
    csv::write_row(out, kRepaymentsHeader);
    for (const auto& r : ds.repayments)
      csv::write_row(out, {r.contract_id, to_string(r.due_date), std::to_string(r.amount_due),
                           r.paid_date ? to_string(*r.paid_date) : std::string(),
                           std::to_string(r.amount_paid)});
  }
}

// ---------------------------------------------------------------------------
// Default history

// Per-customer defaulted due dates, sorted; answers "had this customer
// defaulted by date d" in O(log n).
struct CustomerDefaultIndex {
  std::unordered_map<std::string, std::vector<Date>> defaulted_dues;

  bool defaulted_by(const std::string& customer_id, Date cutoff) const {
    auto it = defaulted_dues.find(customer_id);
    if (it == defaulted_dues.end()) return false;
    return !it->second.empty() && it->second.front() <= cutoff;
  }

  // Count of defaulted repayments due on or before cutoff.
  std::int64_t defaults_by(const std::string& customer_id, Date cutoff) const {
    auto it = defaulted_dues.find(customer_id);
    if (it == defaulted_dues.end()) return 0;
    const auto& v = it->second;
    return std::upper_bound(v.begin(), v.end(), cutoff) - v.begin();
  }
};

inline CustomerDefaultIndex build_default_index(const LoanDataset& ds) {
  CustomerDefaultIndex idx;
  std::unordered_map<std::string, const Contract*> contract_by_id;
  for (const auto& k : ds.contracts) contract_by_id.emplace(k.contract_id, &k);
  for (const auto& r : ds.repayments) {
    if (!r.default_flag()) continue;
    auto it = contract_by_id.find(r.contract_id);
    if (it == contract_by_id.end()) continue;
    idx.defaulted_dues[it->second->borrower_id].push_back(r.due_date);
  }
  for (auto& [id, dues] : idx.defaulted_dues) std::sort(dues.begin(), dues.end());
  return idx;
}

// ---------------------------------------------------------------------------
// Join

// One record per contract: borrower profile + guarantor list + repayment
// history. Indices refer into the source dataset.
struct JoinedRecord {
  std::size_t contract;              // index into ds.contracts
  std::size_t borrower;              // index into ds.customers
  std::vector<std::size_t> guarantees;  // indices into ds.guarantees, file order
  std::vector<std::size_t> repayments;  // indices into ds.repayments, sorted by due_date
};

struct JoinedRecords {
  const LoanDataset* ds = nullptr;
  std::vector<JoinedRecord> records;  // one per contract, contract file order
  std::unordered_map<std::string, std::size_t> customer_index;
  std::unordered_map<std::string, std::size_t> contract_index;
};

// Requires a dataset that passes validate(); one output record per contract.
inline JoinedRecords join_records(const LoanDataset& ds) {
  JoinedRecords out;
  out.ds = &ds;
  out.customer_index = detail::index_by_id(ds.customers, &Customer::customer_id);
  out.contract_index = detail::index_by_id(ds.contracts, &Contract::contract_id);

  out.records.resize(ds.contracts.size());
  for (std::size_t i = 0; i < ds.contracts.size(); ++i) {
    out.records[i].contract = i;
    out.records[i].borrower = out.customer_index.at(ds.contracts[i].borrower_id);
  }
  for (std::size_t i = 0; i < ds.guarantees.size(); ++i)
    out.records[out.contract_index.at(ds.guarantees[i].contract_id)].guarantees.push_back(i);
  for (std::size_t i = 0; i < ds.repayments.size(); ++i)
    out.records[out.contract_index.at(ds.repayments[i].contract_id)].repayments.push_back(i);
  for (auto& rec : out.records) {
    std::stable_sort(rec.repayments.begin(), rec.repayments.end(),
                     [&](std::size_t a, std::size_t b) {
                       return ds.repayments[a].due_date < ds.repayments[b].due_date;
                     });
  }
  return out;
}

}  // namespace guarnet
