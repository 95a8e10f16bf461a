#include <catch2/catch_amalgamated.hpp>
#include <loadcast/calendar.hpp>
#include <loadcast/series.hpp>

using namespace loadcast;

TEST_CASE("hour arithmetic", "[calendar]") {
    CHECK(hour_of_day(0) == 0);
    CHECK(hour_of_day(25) == 1);
    CHECK(hour_of_day(-1) == 23);
    CHECK(day_of_week(0) == 4);        // 1970-01-01 was a Thursday
    CHECK(day_of_week(2 * 24) == 6);   // Saturday
    CHECK(day_of_week(3 * 24) == 0);   // Sunday
    CHECK(is_weekend(2 * 24));
    CHECK(is_weekend(3 * 24 + 23));
    CHECK_FALSE(is_weekend(4 * 24));
    CHECK_FALSE(is_weekend(0));
}

TEST_CASE("timestamp parsing and formatting", "[calendar]") {
    CHECK(parse_hour_iso("1970-01-01T00:00:00Z") == 0);
    CHECK(parse_hour_iso("1970-01-02T00:00:00") == 24);
    CHECK(parse_hour_iso("1970-01-01 05:00:00") == 5);
    CHECK(parse_hour_iso("1969-12-31T23:00:00Z") == -1);
    CHECK(parse_hour_iso("2017-03-05T14:00:00Z") ==
          detail::days_from_civil(2017, 3, 5) * 24 + 14);

    CHECK(format_hour_iso(0) == "1970-01-01T00:00:00Z");
    CHECK(format_hour_iso(-1) == "1969-12-31T23:00:00Z");

    // round trip across a leap day and a century boundary
    for (HourIndex h : {HourIndex(0), HourIndex(-5000), HourIndex(26447),
                        parse_hour_iso("2000-02-29T12:00:00Z"),
                        parse_hour_iso("2100-03-01T00:00:00Z")})
        CHECK(parse_hour_iso(format_hour_iso(h)) == h);

    CHECK_THROWS_AS(parse_hour_iso("not a date"), SchemaError);
    CHECK_THROWS_AS(parse_hour_iso("2020-13-01T00:00:00Z"), SchemaError);
    CHECK_THROWS_AS(parse_hour_iso("2020-01-01T00:30:00Z"), SchemaError);
    CHECK_THROWS_AS(parse_hour_iso("2020-01-01T00:00:59Z"), SchemaError);
}

TEST_CASE("ingestion of clean rows", "[series]") {
    std::vector<RawReading> rows{{0, 1.0}, {1, 2.0}, {2, 3.0}};
    ConsumptionSeries s = ingest_series("m1", rows);
    REQUIRE(s.size() == 3);
    CHECK(s.values == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(s.gap_mask == std::vector<bool>{false, false, false});
    CHECK(s.start == 0);
    CHECK(s.user_id == "m1");
}

TEST_CASE("ingestion sorts by time", "[series]") {
    std::vector<RawReading> rows{{2, 3.0}, {0, 1.0}, {1, 2.0}};
    ConsumptionSeries s = ingest_series("m1", rows);
    CHECK(s.values == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("short gaps are interpolated and flagged", "[series]") {
    std::vector<RawReading> rows{{0, 1.0}, {2, 3.0}};
    ConsumptionSeries s = ingest_series("m1", rows, 3);
    CHECK(s.values == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(s.gap_mask == std::vector<bool>{false, true, false});

    std::vector<RawReading> rows2{{0, 0.0}, {4, 8.0}};
    ConsumptionSeries s2 = ingest_series("m1", rows2, 3);
    CHECK(s2.values == std::vector<double>{0.0, 2.0, 4.0, 6.0, 8.0});
    CHECK(s2.gap_mask == std::vector<bool>{false, true, true, true, false});
}

TEST_CASE("long gaps abort ingestion", "[series]") {
    std::vector<RawReading> rows{{0, 1.0}, {10, 3.0}};
    CHECK_THROWS_AS(ingest_series("m1", rows, 3), GapTooLarge);
}

TEST_CASE("rejects duplicates and bad readings", "[series]") {
    CHECK_THROWS_AS(ingest_series("m1", {{0, 1.0}, {0, 2.0}}), DuplicateTimestamp);
    CHECK_THROWS_AS(ingest_series("m1", {{0, -1.0}}), NegativeReading);
    CHECK_THROWS_AS(ingest_series("m1", {}), EmptyInput);
}

TEST_CASE("ingested series is hourly contiguous", "[series]") {
    std::vector<RawReading> rows{{100, 1.0}, {101, 2.0}, {103, 4.0}, {104, 5.0}};
    ConsumptionSeries s = ingest_series("m1", rows, 3);
    REQUIRE(s.size() == 5);
    CHECK(s.start == 100);
    for (std::size_t t = 0; t < s.size(); ++t)
        CHECK(s.hour_at(t) == 100 + static_cast<HourIndex>(t));
}
