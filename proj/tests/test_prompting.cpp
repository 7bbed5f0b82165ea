#include <doctest.h>

#include <fstream>
#include <sstream>

#include "annotab/errors.hpp"
#include "annotab/ingest.hpp"
#include "annotab/prompting.hpp"
#include "annotab/schema.hpp"

using namespace annotab;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

prompting::DbDescription sample_db() {
    ingest::RawTable a;
    a.source_file = "ma_lga_12345.csv";
    a.headers = {"saledate", "MA", "type", "bedrooms"};
    a.rows = {{"30/09/2007", "441854", "house", "2"}};
    ingest::RawTable b;
    b.source_file = "raw_sales.csv";
    b.headers = {"datesold", "postcode", "price", "propertyType", "bedrooms"};
    b.rows = {{"2007-02-07 00:00:00", "2607", "525000", "house", "4"}};
    prompting::DbDescription db;
    db.schemas.push_back(schema::build_table(a, true).second);
    db.schemas.push_back(schema::build_table(b, true).second);
    return db;
}

}  // namespace

TEST_CASE("synthesis prompt matches the frozen template byte for byte") {
    auto db = sample_db();
    CHECK(prompting::build_sql_synthesis_prompt(db, 15, true) ==
          read_file(std::string(FIXTURES_DIR) + "/expected/synthesis_prompt_steered.txt"));
    CHECK(prompting::build_sql_synthesis_prompt(db, 15, false) ==
          read_file(std::string(FIXTURES_DIR) + "/expected/synthesis_prompt_plain.txt"));
}

TEST_CASE("synthesis prompt uses singular wording for one table") {
    prompting::DbDescription db;
    db.schemas.push_back(sample_db().schemas[0]);
    auto prompt = prompting::build_sql_synthesis_prompt(db, 10, true);
    CHECK(prompt.find("with 1 table.") != std::string::npos);
    CHECK(prompt.find("List 10 examples") != std::string::npos);
}

TEST_CASE("synthesis response parsing prefers fenced code, falls back to ';' lines") {
    std::string text =
        "1. First query:\n```sql\nSELECT * FROM T;\n```\n"
        "2. Second query:\nSELECT COUNT(*) FROM T;\n"
        "3. No code at all here.\n";
    auto parsed = prompting::parse_sql_synthesis_response(text);
    REQUIRE(parsed.items.size() == 2);
    CHECK(parsed.items[0].description == "First query:");
    CHECK(parsed.items[0].sql == "SELECT * FROM T;");
    CHECK(parsed.items[1].sql == "SELECT COUNT(*) FROM T;");
    CHECK(parsed.dropped == 1);
}

TEST_CASE("synthesis response with multi-line fenced SQL keeps internal newlines") {
    std::string text = "1. Query:\n```\nSELECT A\nFROM T\nWHERE A > 1;\n```\n";
    auto parsed = prompting::parse_sql_synthesis_response(text);
    REQUIRE(parsed.items.size() == 1);
    CHECK(parsed.items[0].sql == "SELECT A\nFROM T\nWHERE A > 1;");
}

TEST_CASE("synthesis parse throws only when nothing is numbered") {
    CHECK_THROWS_AS(prompting::parse_sql_synthesis_response("no items here"), NoItemsFound);
    auto only_dropped = prompting::parse_sql_synthesis_response("1. nothing usable\n");
    CHECK(only_dropped.items.empty());
    CHECK(only_dropped.dropped == 1);
}

TEST_CASE("translation prompt lays out preamble, examples and batch") {
    std::vector<prompting::TranslationExample> examples = {
        {"SELECT 1;", "def output = 1", 1}};
    std::vector<std::string> batch = {"SELECT A FROM T;", "SELECT B FROM T;"};
    auto prompt = prompting::build_translation_prompt(examples, batch);
    CHECK(prompt.rfind("REL is a database management system language", 0) == 0);
    CHECK(prompt.find("1.SQL: \n```\nSELECT 1;\n```\n") != std::string::npos);
    CHECK(prompt.find("1.REL: \n```\ndef output = 1\n```\n") != std::string::npos);
    CHECK(prompt.find("1.SQL:\n```\nSELECT A FROM T;\n```\n") != std::string::npos);
    CHECK(prompt.find("2.SQL:\n```\nSELECT B FROM T;\n```\n") != std::string::npos);
    CHECK(prompt.find("No explanation is needed.") != std::string::npos);
}

TEST_CASE("translation response entries are matched by number, not position") {
    std::string text =
        "2.REL:\n```\nsecond program\n```\n"
        "1.REL:\n```\nfirst program\n```\n";
    auto out = prompting::parse_translation_response(text, 3);
    REQUIRE(out.size() == 3);
    CHECK(out[0] == std::optional<std::string>("first program"));
    CHECK(out[1] == std::optional<std::string>("second program"));
    CHECK_FALSE(out[2].has_value());
}

TEST_CASE("translation response accepts inline and free-text forms") {
    auto out = prompting::parse_translation_response(
        "1.REL: def inline_program\n2.REL:\nfree text body\nmore text\n3.SQL:\nignored\n", 2);
    CHECK(out[0] == std::optional<std::string>("def inline_program"));
    CHECK(out[1] == std::optional<std::string>("free text body\nmore text"));
}

TEST_CASE("out-of-range numbers are ignored") {
    auto out = prompting::parse_translation_response("7.REL:\n```\nx\n```\n", 2);
    CHECK_FALSE(out[0].has_value());
    CHECK_FALSE(out[1].has_value());
}

TEST_CASE("column annotation prompt embeds the schema") {
    auto db = sample_db();
    auto prompt = prompting::build_column_annotation_prompt(db.schemas[1]);
    CHECK(prompt.find("Schema: CREATE TABLE RawSales(") != std::string::npos);
    CHECK(prompt.find("`input_columns' and `output_column'") != std::string::npos);
}

TEST_CASE("column annotation parse finds the JSON object amid prose") {
    auto ann = prompting::parse_column_annotation_response(
        "Sure! Here you go:\n```json\n"
        R"({"input_columns": ["A", "B"], "output_column": "C"})"
        "\n```\nHope this helps.");
    CHECK(ann.input_columns == std::vector<std::string>{"A", "B"});
    CHECK(ann.output_column == "C");
}

TEST_CASE("column annotation parse skips decoy braces inside strings") {
    auto ann = prompting::parse_column_annotation_response(
        R"(note: "{not json}" and then {"input_columns": ["X"], "output_column": "Y"})");
    CHECK(ann.input_columns == std::vector<std::string>{"X"});
    CHECK(ann.output_column == "Y");
}

TEST_CASE("column annotation parse rejects malformed payloads") {
    CHECK_THROWS_AS(prompting::parse_column_annotation_response("no json at all"),
                    MalformedAnnotation);
    CHECK_THROWS_AS(prompting::parse_column_annotation_response(
                        R"({"input_columns": "notanarray", "output_column": "C"})"),
                    MalformedAnnotation);
    CHECK_THROWS_AS(prompting::parse_column_annotation_response(
                        R"({"input_columns": [], "output_column": "C"})"),
                    MalformedAnnotation);
    CHECK_THROWS_AS(prompting::parse_column_annotation_response(
                        R"({"input_columns": [1], "output_column": "C"})"),
                    MalformedAnnotation);
}
