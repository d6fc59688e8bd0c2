#include "qfcsim/cli/csv.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace qfcsim::cli;

namespace {
Table parse(const std::string& text, const std::vector<std::string>& cols) {
    std::istringstream in(text);
    return parse_table(in, cols, "t.csv");
}

std::string error_of(const std::string& text, const std::vector<std::string>& cols) {
    try {
        parse(text, cols);
    } catch (const qfcsim::ValidationError& e) {
        return e.what();
    }
    return {};
}
}  // namespace

TEST(Csv, ReadsColumnsInAnyOrder) {
    const auto t = parse("# comment\nwidth_um, position_um\n1.5,100\n\n2,200\n",
                         {"position_um", "width_um"});
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.column("position_um"), (std::vector<double>{100, 200}));
    EXPECT_EQ(t.column("width_um"), (std::vector<double>{1.5, 2}));
}

TEST(Csv, MissingAndUnexpectedColumns) {
    const auto msg = error_of("position_um,depth\n1,2\n", {"position_um", "width_um"});
    EXPECT_NE(msg.find("unexpected column 'depth'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("missing required column 'width_um'"), std::string::npos) << msg;
}

TEST(Csv, ListsEveryBadRow) {
    const auto msg = error_of("pump_mw,eta_int\n1,0.1\n2,abc\n3\n4,0.4\nx,y\n", {"pump_mw", "eta_int"});
    EXPECT_NE(msg.find("line 3, column 'eta_int'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 4: expected 2 fields, found 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 6, column 'pump_mw'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 6, column 'eta_int'"), std::string::npos) << msg;
}

TEST(Csv, RejectsEmptyInput) {
    EXPECT_NE(error_of("", {"a"}).find("missing header row"), std::string::npos);
    EXPECT_NE(error_of("a\n", {"a"}).find("no data rows"), std::string::npos);
    EXPECT_NE(error_of("a\nnan\n", {"a"}).find("not a finite number"), std::string::npos);
}
