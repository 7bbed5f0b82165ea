#include "annotab/sqlexec.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <unordered_set>

#include <sqlite3.h>

#include "annotab/digest.hpp"
#include "annotab/errors.hpp"

namespace annotab::sqlexec {

namespace {

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

// First bare word of the statement, uppercased.
std::string leading_keyword(const std::string& sql) {
    std::size_t i = 0;
    while (i < sql.size()) {
        if (std::isspace(static_cast<unsigned char>(sql[i]))) {
            ++i;
        } else if (sql.compare(i, 2, "--") == 0) {
            while (i < sql.size() && sql[i] != '\n') ++i;
        } else if (sql.compare(i, 2, "/*") == 0) {
            auto end = sql.find("*/", i + 2);
            i = end == std::string::npos ? sql.size() : end + 2;
        } else {
            break;
        }
    }
    std::size_t start = i;
    while (i < sql.size() && (std::isalnum(static_cast<unsigned char>(sql[i])) || sql[i] == '_')) {
        ++i;
    }
    return upper(sql.substr(start, i - start));
}

const std::unordered_set<std::string>& forbidden_keywords() {
    static const std::unordered_set<std::string> kw = {
        "INSERT", "UPDATE", "DELETE", "DROP", "CREATE", "ALTER",
        "ATTACH", "DETACH", "PRAGMA", "REPLACE", "VACUUM", "REINDEX",
        "ANALYZE", "BEGIN", "COMMIT", "ROLLBACK", "SAVEPOINT", "RELEASE",
    };
    return kw;
}

std::string quote_identifier(const std::string& name) {
    std::string out = "\"";
    for (char c : name) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

// Identifiers that sqlite accepts bare: letter/underscore head, alnum/_
// tail, not a keyword. Anything else is emitted verbatim in faithful mode
// and fails at prepare time, which is the behavior we want to observe.
bool needs_verbatim(const std::string& name) {
    if (name.empty()) return true;
    if (!std::isalpha(static_cast<unsigned char>(name[0])) && name[0] != '_') return true;
    return false;
}

Cell column_cell(sqlite3_stmt* stmt, int col) {
    switch (sqlite3_column_type(stmt, col)) {
        case SQLITE_NULL:
            return std::monostate{};
        case SQLITE_INTEGER:
            return static_cast<std::int64_t>(sqlite3_column_int64(stmt, col));
        case SQLITE_FLOAT:
            return sqlite3_column_double(stmt, col);
        default: {
            const unsigned char* text = sqlite3_column_text(stmt, col);
            int n = sqlite3_column_bytes(stmt, col);
            return std::string(reinterpret_cast<const char*>(text), static_cast<std::size_t>(n));
        }
    }
}

}  // namespace

const char* annotation_status_name(AnnotationStatus s) {
    switch (s) {
        case AnnotationStatus::Valid: return "Valid";
        case AnnotationStatus::Error: return "Error";
        case AnnotationStatus::Empty: return "Empty";
    }
    return "Error";
}

struct Database::Impl {
    sqlite3* db = nullptr;
    std::vector<std::string> table_names;
    ~Impl() {
        if (db) sqlite3_close(db);
    }
};

Database::Database() : impl_(std::make_unique<Impl>()) {}
Database::~Database() = default;
Database::Database(Database&&) noexcept = default;
Database& Database::operator=(Database&&) noexcept = default;

Database load_database(const std::vector<Table>& tables) {
    Database handle;
    auto* impl = handle.impl();
    if (sqlite3_open(":memory:", &impl->db) != SQLITE_OK) {
        throw SchemaError("cannot open in-memory database");
    }
    std::unordered_set<std::string> seen;
    for (const auto& table : tables) {
        if (!seen.insert(upper(table.name)).second) {
            throw SchemaError("duplicate table name: " + table.name);
        }
    }
    for (const auto& table : tables) {
        // Identifier is used verbatim when it is not a plain bare name;
        // sqlite's rejection is then surfaced as SchemaError.
        std::string ddl = "CREATE TABLE " +
                          (needs_verbatim(table.name) ? table.name : quote_identifier(table.name)) +
                          " (";
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            if (c) ddl += ", ";
            const auto& [name, type] = table.columns[c];
            ddl += needs_verbatim(name) ? name : quote_identifier(name);
            switch (type) {
                case ingest::SqlType::Text: ddl += " TEXT"; break;
                case ingest::SqlType::BigInt: ddl += " INTEGER"; break;
                case ingest::SqlType::Float: ddl += " REAL"; break;
            }
        }
        ddl += ")";
        char* err = nullptr;
        if (sqlite3_exec(impl->db, ddl.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
            std::string msg = err ? err : "DDL rejected";
            sqlite3_free(err);
            throw SchemaError("table " + table.name + ": " + msg);
        }

        std::string insert = "INSERT INTO " + quote_identifier(table.name) + " VALUES (";
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            if (c) insert += ",";
            insert += "?";
        }
        insert += ")";
        sqlite3_stmt* stmt = nullptr;
        if (sqlite3_prepare_v2(impl->db, insert.c_str(), -1, &stmt, nullptr) != SQLITE_OK) {
            throw SchemaError("cannot prepare insert for " + table.name + ": " +
                              sqlite3_errmsg(impl->db));
        }
        sqlite3_exec(impl->db, "BEGIN", nullptr, nullptr, nullptr);
        for (const auto& row : table.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                int idx = static_cast<int>(c) + 1;
                const Cell& cell = row[c];
                if (is_null(cell)) {
                    sqlite3_bind_null(stmt, idx);
                } else if (const auto* iv = std::get_if<std::int64_t>(&cell)) {
                    sqlite3_bind_int64(stmt, idx, *iv);
                } else if (const auto* dv = std::get_if<double>(&cell)) {
                    sqlite3_bind_double(stmt, idx, *dv);
                } else {
                    const auto& s = std::get<std::string>(cell);
                    sqlite3_bind_text(stmt, idx, s.data(), static_cast<int>(s.size()),
                                      SQLITE_TRANSIENT);
                }
            }
            if (sqlite3_step(stmt) != SQLITE_DONE) {
                std::string msg = sqlite3_errmsg(impl->db);
                sqlite3_finalize(stmt);
                throw SchemaError("insert into " + table.name + " failed: " + msg);
            }
            sqlite3_reset(stmt);
        }
        sqlite3_finalize(stmt);
        sqlite3_exec(impl->db, "COMMIT", nullptr, nullptr, nullptr);
        impl->table_names.push_back(table.name);
    }
    return handle;
}

ExecOutcome execute_sql(const Database& db, const std::string& sql, double timeout_seconds) {
    auto* impl = db.impl();
    std::string kw = leading_keyword(sql);
    if (forbidden_keywords().count(kw)) {
        return ExecOutcome::error("mutating or administrative statement rejected: " + kw);
    }

    sqlite3_stmt* stmt = nullptr;
    // Only the first statement is executed; the tail is discarded.
    if (sqlite3_prepare_v2(impl->db, sql.c_str(), -1, &stmt, nullptr) != SQLITE_OK) {
        return ExecOutcome::error(sqlite3_errmsg(impl->db));
    }
    if (!stmt) return ExecOutcome::error("empty statement");
    if (!sqlite3_stmt_readonly(stmt)) {
        sqlite3_finalize(stmt);
        return ExecOutcome::error("statement is not read-only");
    }

    using clock = std::chrono::steady_clock;
    struct Deadline {
        clock::time_point at;
    } deadline{clock::now() +
               std::chrono::microseconds(static_cast<std::int64_t>(timeout_seconds * 1e6))};
    sqlite3_progress_handler(
        impl->db, 1000,
        [](void* ctx) -> int {
            return clock::now() >= static_cast<Deadline*>(ctx)->at ? 1 : 0;
        },
        &deadline);

    ResultSet rs;
    int cols = sqlite3_column_count(stmt);
    for (int c = 0; c < cols; ++c) {
        const char* name = sqlite3_column_name(stmt, c);
        rs.column_names.push_back(name ? name : "");
    }
    int rc;
    while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
        Row row;
        row.reserve(static_cast<std::size_t>(cols));
        for (int c = 0; c < cols; ++c) row.push_back(column_cell(stmt, c));
        rs.rows.push_back(std::move(row));
    }
    sqlite3_progress_handler(impl->db, 0, nullptr, nullptr);
    std::string message = sqlite3_errmsg(impl->db);
    sqlite3_finalize(stmt);
    if (rc == SQLITE_DONE) return ExecOutcome::ok(std::move(rs));
    if (rc == SQLITE_INTERRUPT || clock::now() >= deadline.at) return ExecOutcome::timeout();
    return ExecOutcome::error(message);
}

AnnotationStatus classify_outcome(const ExecOutcome& outcome) {
    switch (outcome.kind) {
        case OutcomeKind::Ok:
            return outcome.result.rows.empty() ? AnnotationStatus::Empty
                                               : AnnotationStatus::Valid;
        case OutcomeKind::EngineError:
        case OutcomeKind::Timeout:
            return AnnotationStatus::Error;
    }
    return AnnotationStatus::Error;
}

std::string content_hash(const Database& db) {
    auto* impl = db.impl();
    std::string blob;
    for (const auto& name : impl->table_names) {
        blob += "table:" + name + "\n";
        std::string query = "SELECT * FROM " + quote_identifier(name);
        sqlite3_stmt* stmt = nullptr;
        if (sqlite3_prepare_v2(impl->db, query.c_str(), -1, &stmt, nullptr) != SQLITE_OK) {
            blob += "unreadable\n";
            continue;
        }
        int cols = sqlite3_column_count(stmt);
        for (int c = 0; c < cols; ++c) {
            blob += sqlite3_column_name(stmt, c);
            blob += '|';
        }
        blob += '\n';
        while (sqlite3_step(stmt) == SQLITE_ROW) {
            for (int c = 0; c < cols; ++c) {
                const unsigned char* text = sqlite3_column_text(stmt, c);
                int n = sqlite3_column_bytes(stmt, c);
                blob += std::to_string(sqlite3_column_type(stmt, c));
                blob += ':';
                if (text) blob.append(reinterpret_cast<const char*>(text),
                                      static_cast<std::size_t>(n));
                blob += '\x1f';
            }
            blob += '\n';
        }
        sqlite3_finalize(stmt);
    }
    return sha256_hex(blob);
}

}  // namespace annotab::sqlexec
