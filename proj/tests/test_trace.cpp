#include "doctest.h"

#include "dpaudit/error.hpp"
#include "dpaudit/serialize.hpp"
#include "fixtures.hpp"

using namespace dpaudit;

TEST_CASE("validate_trace flags an empty trace") {
  WorkflowTrace t;
  const auto v = validate_trace(t);
  REQUIRE(v.size() == 1);
  CHECK(v[0].message == "pages empty");
}

TEST_CASE("validate_trace names a dangling link target") {
  auto t = fixtures::benign_portal();
  t.pages[0].elements[0].target_page = "p9";
  const auto v = validate_trace(t);
  REQUIRE_FALSE(v.empty());
  bool named = false;
  for (const auto& x : v) named = named || x.message.find("p9") != std::string::npos;
  CHECK(named);
}

TEST_CASE("validate_trace accepts the three-page portal") {
  CHECK(validate_trace(fixtures::benign_portal()).empty());
}

TEST_CASE("validate_trace catches structural faults") {
  SUBCASE("two start pages") {
    auto t = fixtures::benign_portal();
    t.pages[1].is_start = true;
    CHECK_FALSE(validate_trace(t).empty());
  }
  SUBCASE("duplicate entity id") {
    auto t = fixtures::benign_portal();
    t.pages[1].elements[0].element_id = "el_privacy";
    CHECK_FALSE(validate_trace(t).empty());
  }
  SUBCASE("disconnected walk") {
    auto t = fixtures::benign_portal();
    t.steps[1].source_page = "home";
    CHECK_FALSE(validate_trace(t).empty());
  }
  SUBCASE("multi_page flag disagrees with stages") {
    auto t = fixtures::benign_portal();
    fixtures::form_of(t).fields[2].stage = 1;
    CHECK_FALSE(validate_trace(t).empty());
    fixtures::form_of(t).multi_page = true;
    CHECK(validate_trace(t).empty());
  }
}

TEST_CASE("resolve_evidence") {
  const auto t = fixtures::benign_portal();
  SUBCASE("substring of a disclosure") {
    auto r = resolve_evidence(t, {"policy", "dsc_methods", "privacy@broker.example"});
    CHECK(r.kind == EntityKind::Disclosure);
  }
  SUBCASE("phrase naming two channels") {
    CHECK_NOTHROW(resolve_evidence(t, {"policy", "dsc_methods", "via email or webform"}));
  }
  SUBCASE("one character off is fabricated") {
    CHECK_THROWS_AS(resolve_evidence(t, {"policy", "dsc_methods", "via email or webforn"}),
                    FabricatedEvidence);
  }
  SUBCASE("unknown entity") {
    CHECK_THROWS_AS(resolve_evidence(t, {"policy", "dsc_nope", "x"}), UnknownEntity);
    CHECK_THROWS_AS(resolve_evidence(t, {"nowhere", "dsc_methods", "x"}), UnknownEntity);
  }
  SUBCASE("form fields and sections resolve") {
    CHECK(resolve_evidence(t, {"form", "fld_email", "Email"}).kind == EntityKind::FormField);
    CHECK(resolve_evidence(t, {"policy", "sec_rights", "Rights"}).kind == EntityKind::Section);
  }
}

TEST_CASE("navigation_depth") {
  SUBCASE("start page") {
    CHECK(navigation_depth(fixtures::benign_portal(), "el_privacy") == 0);
  }
  SUBCASE("five-page chain") {
    CHECK(navigation_depth(fixtures::chain(5), "el_end") == 4);
  }
  SUBCASE("orphan page") {
    auto t = fixtures::chain(3);
    t.pages[1].elements.clear();
    CHECK_THROWS_AS(navigation_depth(t, "el_end"), UnreachableTarget);
  }
  SUBCASE("unknown element") {
    CHECK_THROWS_AS(navigation_depth(fixtures::chain(2), "el_missing"), UnknownEntity);
  }
}

TEST_CASE("channel_inventory") {
  SUBCASE("email and webform") {
    const auto inv = channel_inventory(fixtures::benign_portal());
    REQUIRE(inv.size() == 2);
    CHECK(inv.at(ChannelKind::Email).reachable);
    CHECK(inv.at(ChannelKind::Webform).reachable);
    CHECK(inv.at(ChannelKind::Email).complete_on_pages == std::set<std::string>{"policy"});
  }
  SUBCASE("no channels") {
    CHECK(channel_inventory(fixtures::chain(2)).empty());
  }
  SUBCASE("email named on one page, address on another") {
    auto t = fixtures::benign_portal();
    auto& d = fixtures::methods_of(t);
    d.detailed_channels = {ChannelKind::Webform};
    Section contact;
    contact.section_id = "sec_contact";
    contact.label = "Contact";
    contact.kind = SectionKind::Contact;
    DisclosureStatement addr;
    addr.disclosure_id = "dsc_addr";
    addr.text = "privacy@broker.example";
    addr.detailed_channels = {ChannelKind::Email};
    contact.disclosures.push_back(addr);
    t.pages[0].sections.push_back(contact);
    REQUIRE(validate_trace(t).empty());
    const auto inv = channel_inventory(t);
    CHECK(inv.at(ChannelKind::Email).complete_on_pages.empty());
    CHECK(inv.at(ChannelKind::Email).complete_in_union);
  }
}

TEST_CASE("classify_heading") {
  CHECK(classify_heading("Your California Privacy Rights") == SectionKind::CcpaRights);
  CHECK(classify_heading("Do Not Sell My Personal Information") == SectionKind::OptOut);
  CHECK(classify_heading("Contact Us") == SectionKind::Contact);
  CHECK(classify_heading("Additional Information", {"additional information"}) == SectionKind::Other);
}

TEST_CASE("trace documents round-trip") {
  const auto t = fixtures::benign_portal();
  const auto doc = trace_to_json(t);
  const auto back = trace_from_json(doc);
  CHECK(canonical_dump(trace_to_json(back)) == canonical_dump(doc));

  auto extra = doc;
  extra["surprise"] = 1;
  CHECK_THROWS_AS(trace_from_json(extra), SchemaError);
  auto missing = doc;
  missing.erase("pages");
  CHECK_THROWS_AS(trace_from_json(missing), SchemaError);
  CHECK_THROWS_AS(parse_document("{not json"), SchemaError);
}
