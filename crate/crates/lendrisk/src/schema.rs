//! Mapping from logical fields to the column headers of the two export files.
//!
//! Defaults follow the Lending Club export headers. Renamed exports load by
//! overriding individual entries in the run configuration.

use serde::{Deserialize, Serialize};

/// Headers of the accepted-loans file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcceptedColumns {
    pub loan_amount: String,
    pub term: String,
    pub installment: String,
    pub emp_length: String,
    pub home_ownership: String,
    pub verification_status: String,
    pub purpose: String,
    pub dti: String,
    pub earliest_credit_line: String,
    pub open_credit_lines: String,
    pub derogatory_public_records: String,
    pub revolving_utilization: String,
    pub total_credit_lines: String,
    pub mortgage_credit_lines: String,
    pub bankruptcies: String,
    pub annual_income: String,
    pub fico_low: String,
    pub fico_high: String,
    pub revolving_balance: String,
    pub issue_date: String,
    pub status: String,
}

impl Default for AcceptedColumns {
    fn default() -> Self {
        Self {
            loan_amount: "loan_amnt".into(),
            term: "term".into(),
            installment: "installment".into(),
            emp_length: "emp_length".into(),
            home_ownership: "home_ownership".into(),
            verification_status: "verification_status".into(),
            purpose: "purpose".into(),
            dti: "dti".into(),
            earliest_credit_line: "earliest_cr_line".into(),
            open_credit_lines: "open_acc".into(),
            derogatory_public_records: "pub_rec".into(),
            revolving_utilization: "revol_util".into(),
            total_credit_lines: "total_acc".into(),
            mortgage_credit_lines: "mort_acc".into(),
            bankruptcies: "pub_rec_bankruptcies".into(),
            annual_income: "annual_inc".into(),
            fico_low: "fico_range_low".into(),
            fico_high: "fico_range_high".into(),
            revolving_balance: "revol_bal".into(),
            issue_date: "issue_d".into(),
            status: "loan_status".into(),
        }
    }
}

impl AcceptedColumns {
    /// `(field, header)` pairs in a fixed order.
    pub fn pairs(&self) -> Vec<(&'static str, &str)> {
        vec![
            (field::LOAN_AMOUNT, &self.loan_amount),
            (field::TERM, &self.term),
            (field::INSTALLMENT, &self.installment),
            (field::EMP_LENGTH, &self.emp_length),
            (field::HOME_OWNERSHIP, &self.home_ownership),
            (field::VERIFICATION_STATUS, &self.verification_status),
            (field::PURPOSE, &self.purpose),
            (field::DTI, &self.dti),
            (field::EARLIEST_CREDIT_LINE, &self.earliest_credit_line),
            (field::OPEN_CREDIT_LINES, &self.open_credit_lines),
            (field::DEROGATORY_PUBLIC_RECORDS, &self.derogatory_public_records),
            (field::REVOLVING_UTILIZATION, &self.revolving_utilization),
            (field::TOTAL_CREDIT_LINES, &self.total_credit_lines),
            (field::MORTGAGE_CREDIT_LINES, &self.mortgage_credit_lines),
            (field::BANKRUPTCIES, &self.bankruptcies),
            (field::ANNUAL_INCOME, &self.annual_income),
            (field::FICO_LOW, &self.fico_low),
            (field::FICO_HIGH, &self.fico_high),
            (field::REVOLVING_BALANCE, &self.revolving_balance),
            (field::DATE, &self.issue_date),
            (field::STATUS, &self.status),
        ]
    }
}

/// Headers of the rejected-applications file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RejectedColumns {
    pub loan_amount: String,
    pub application_date: String,
    pub purpose: String,
    pub dti: String,
    pub emp_length: String,
}

impl Default for RejectedColumns {
    fn default() -> Self {
        Self {
            loan_amount: "Amount Requested".into(),
            application_date: "Application Date".into(),
            purpose: "Loan Title".into(),
            dti: "Debt-To-Income Ratio".into(),
            emp_length: "Employment Length".into(),
        }
    }
}

impl RejectedColumns {
    pub fn pairs(&self) -> Vec<(&'static str, &str)> {
        vec![
            (field::LOAN_AMOUNT, &self.loan_amount),
            (field::DATE, &self.application_date),
            (field::PURPOSE, &self.purpose),
            (field::DTI, &self.dti),
            (field::EMP_LENGTH, &self.emp_length),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub accepted: AcceptedColumns,
    pub rejected: RejectedColumns,
}

/// Logical field names used as keys in parsed records.
pub mod field {
    pub const LOAN_AMOUNT: &str = "loan_amount";
    pub const TERM: &str = "term";
    pub const INSTALLMENT: &str = "installment";
    pub const EMP_LENGTH: &str = "emp_length";
    pub const HOME_OWNERSHIP: &str = "home_ownership";
    pub const VERIFICATION_STATUS: &str = "verification_status";
    pub const PURPOSE: &str = "purpose";
    pub const DTI: &str = "dti";
    pub const EARLIEST_CREDIT_LINE: &str = "earliest_credit_line";
    pub const OPEN_CREDIT_LINES: &str = "open_credit_lines";
    pub const DEROGATORY_PUBLIC_RECORDS: &str = "derogatory_public_records";
    pub const REVOLVING_UTILIZATION: &str = "revolving_utilization";
    pub const TOTAL_CREDIT_LINES: &str = "total_credit_lines";
    pub const MORTGAGE_CREDIT_LINES: &str = "mortgage_credit_lines";
    pub const BANKRUPTCIES: &str = "bankruptcies";
    pub const ANNUAL_INCOME: &str = "annual_income";
    pub const FICO_LOW: &str = "fico_low";
    pub const FICO_HIGH: &str = "fico_high";
    pub const REVOLVING_BALANCE: &str = "revolving_balance";
    /// Issue date for accepted loans, application date for rejected ones.
    pub const DATE: &str = "date";
    pub const STATUS: &str = "status";
}
