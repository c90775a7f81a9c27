#pragma once

// Hand-sized dataset builders shared across the unit tests.

#include <optional>
#include <string>
#include <vector>

#include "guarnet/loan_data.hpp"

namespace fixtures {

inline guarnet::Customer customer(const std::string& id,
                                  const std::string& nature = "manufacturing",
                                  guarnet::EnterpriseScale scale = guarnet::EnterpriseScale::small,
                                  guarnet::Date reg = guarnet::make_date(2010, 1, 1)) {
  guarnet::Customer c;
  c.customer_id = id;
  c.business_nature = nature;
  c.registered_capital = 1000000;
  c.enterprise_scale = scale;
  c.employee_count = 40;
  c.registration_date = reg;
  return c;
}

inline guarnet::Contract contract(const std::string& id, const std::string& borrower,
                                  guarnet::Date start, int term_months = 12,
                                  guarnet::Money amount = 500000) {
  guarnet::Contract k;
  k.contract_id = id;
  k.borrower_id = borrower;
  k.loan_amount = amount;
  k.start_date = start;
  k.term_months = term_months;
  k.capital_return_type = "lump_sum";
  k.interest_return_type = "monthly";
  return k;
}

inline guarnet::Guarantee guarantee(const std::string& contract_id,
                                    const std::string& guarantor, guarnet::Date signed_on,
                                    guarnet::Money amount = 500000) {
  guarnet::Guarantee g;
  g.contract_id = contract_id;
  g.guarantor_id = guarantor;
  g.guarantee_amount = amount;
  g.signed_date = signed_on;
  return g;
}

inline guarnet::Repayment repayment(const std::string& contract_id, guarnet::Date due,
                                    std::optional<guarnet::Date> paid,
                                    guarnet::Money amount = 10000) {
  guarnet::Repayment r;
  r.contract_id = contract_id;
  r.due_date = due;
  r.amount_due = amount;
  r.paid_date = paid;
  r.amount_paid = paid.has_value() ? amount : 0;
  return r;
}

// Three firms, one contract each for B and C, both guaranteed by A.
inline guarnet::LoanDataset triangle_dataset() {
  using guarnet::make_date;
  guarnet::LoanDataset ds;
  ds.customers = {customer("A"), customer("B"), customer("C")};
  ds.contracts = {contract("KB", "B", make_date(2013, 1, 10), 12),
                  contract("KC", "C", make_date(2013, 2, 5), 12)};
  ds.guarantees = {guarantee("KB", "A", make_date(2013, 1, 8)),
                   guarantee("KC", "A", make_date(2013, 2, 3))};
  ds.repayments = {
      repayment("KB", make_date(2013, 4, 10), make_date(2013, 4, 9)),
      repayment("KC", make_date(2013, 5, 5), std::nullopt),
  };
  return ds;
}

}  // namespace fixtures
