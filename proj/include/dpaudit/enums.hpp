#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace dpaudit {

// Closed vocabularies shared by the trace model, the taxonomy and the
// interchange documents. Every enum has a stable wire name.

enum class SectionKind { PrivacyRights, CcpaRights, OptOut, Contact, Marketing, Other };
enum class ChannelKind { Webform, Email, Phone, Postal, ExternalApp };
enum class RightKind { Access, Delete, OptOut, Correct };
enum class ElementKind { Link, Button, FormRef, Overlay, Expandable, PlainTextReference };
enum class IdentifierKind { Email, IpAddress, CookieId, Maid, Phone, Postal };
enum class FormFraming { Access, OptOut, Marketing, Generic };
enum class Sensitivity {
  None,
  GovId,
  Ssn,
  Biometric,
  AccountNumber,
  DeviceIdentifier,
  DocumentUpload,
  ProfileUrl
};
enum class Relevance { VerificationEssential, FulfillmentEssential, NonEssential };
enum class ActionKind { Click, Expand, Fill, NextPage, OpenUrl };

enum class Category {
  AddingSteps,
  ConflictingInfo,
  CreatingBarriers,
  FeedforwardAmbiguity,
  HiddenInfo,
  InfoWithoutContext,
  PrivacyMazes,
  VisualProminence
};
inline constexpr std::size_t kCategoryCount = 8;

enum class FailureCategory {
  AutomationInstability,
  AgentInstability,
  SecurityBarrier,
  ContentFormatLimitation,
  NavigationFailure,
  InteractionFailure
};
inline constexpr std::size_t kFailureCategoryCount = 6;

template <class E>
struct EnumNames;

#define DPAUDIT_ENUM_NAMES(E, N, ...)                                   \
  template <>                                                           \
  struct EnumNames<E> {                                                 \
    static constexpr std::string_view type_name = #E;                   \
    static constexpr std::array<std::pair<E, std::string_view>, N> all{ \
        {__VA_ARGS__}};                                                 \
  }

DPAUDIT_ENUM_NAMES(SectionKind, 6, {SectionKind::PrivacyRights, "privacy_rights"},
                   {SectionKind::CcpaRights, "ccpa_rights"}, {SectionKind::OptOut, "opt_out"},
                   {SectionKind::Contact, "contact"}, {SectionKind::Marketing, "marketing"},
                   {SectionKind::Other, "other"});
DPAUDIT_ENUM_NAMES(ChannelKind, 5, {ChannelKind::Webform, "webform"},
                   {ChannelKind::Email, "email"}, {ChannelKind::Phone, "phone"},
                   {ChannelKind::Postal, "postal"}, {ChannelKind::ExternalApp, "external_app"});
DPAUDIT_ENUM_NAMES(RightKind, 4, {RightKind::Access, "access"}, {RightKind::Delete, "delete"},
                   {RightKind::OptOut, "opt_out"}, {RightKind::Correct, "correct"});
DPAUDIT_ENUM_NAMES(ElementKind, 6, {ElementKind::Link, "link"}, {ElementKind::Button, "button"},
                   {ElementKind::FormRef, "form_ref"}, {ElementKind::Overlay, "overlay"},
                   {ElementKind::Expandable, "expandable"},
                   {ElementKind::PlainTextReference, "plain_text_reference"});
DPAUDIT_ENUM_NAMES(IdentifierKind, 6, {IdentifierKind::Email, "email"},
                   {IdentifierKind::IpAddress, "ip_address"},
                   {IdentifierKind::CookieId, "cookie_id"}, {IdentifierKind::Maid, "maid"},
                   {IdentifierKind::Phone, "phone"}, {IdentifierKind::Postal, "postal"});
DPAUDIT_ENUM_NAMES(FormFraming, 4, {FormFraming::Access, "access"},
                   {FormFraming::OptOut, "opt_out"}, {FormFraming::Marketing, "marketing"},
                   {FormFraming::Generic, "generic"});
DPAUDIT_ENUM_NAMES(Sensitivity, 8, {Sensitivity::None, "none"}, {Sensitivity::GovId, "gov_id"},
                   {Sensitivity::Ssn, "ssn"}, {Sensitivity::Biometric, "biometric"},
                   {Sensitivity::AccountNumber, "account_number"},
                   {Sensitivity::DeviceIdentifier, "device_identifier"},
                   {Sensitivity::DocumentUpload, "document_upload"},
                   {Sensitivity::ProfileUrl, "profile_url"});
DPAUDIT_ENUM_NAMES(Relevance, 3, {Relevance::VerificationEssential, "verification_essential"},
                   {Relevance::FulfillmentEssential, "fulfillment_essential"},
                   {Relevance::NonEssential, "non_essential"});
DPAUDIT_ENUM_NAMES(ActionKind, 5, {ActionKind::Click, "click"}, {ActionKind::Expand, "expand"},
                   {ActionKind::Fill, "fill"}, {ActionKind::NextPage, "next_page"},
                   {ActionKind::OpenUrl, "open_url"});
DPAUDIT_ENUM_NAMES(Category, 8, {Category::AddingSteps, "AddingSteps"},
                   {Category::ConflictingInfo, "ConflictingInfo"},
                   {Category::CreatingBarriers, "CreatingBarriers"},
                   {Category::FeedforwardAmbiguity, "FeedforwardAmbiguity"},
                   {Category::HiddenInfo, "HiddenInfo"},
                   {Category::InfoWithoutContext, "InfoWithoutContext"},
                   {Category::PrivacyMazes, "PrivacyMazes"},
                   {Category::VisualProminence, "VisualProminence"});
DPAUDIT_ENUM_NAMES(FailureCategory, 6,
                   {FailureCategory::AutomationInstability, "AutomationInstability"},
                   {FailureCategory::AgentInstability, "AgentInstability"},
                   {FailureCategory::SecurityBarrier, "SecurityBarrier"},
                   {FailureCategory::ContentFormatLimitation, "ContentFormatLimitation"},
                   {FailureCategory::NavigationFailure, "NavigationFailure"},
                   {FailureCategory::InteractionFailure, "InteractionFailure"});

#undef DPAUDIT_ENUM_NAMES

template <class E>
constexpr std::string_view to_string(E value) {
  for (const auto& [v, name] : EnumNames<E>::all) {
    if (v == value) return name;
  }
  return "?";
}

template <class E>
std::optional<E> try_parse(std::string_view name) {
  for (const auto& [v, n] : EnumNames<E>::all) {
    if (n == name) return v;
  }
  return std::nullopt;
}

template <class E>
E parse(std::string_view name) {
  if (auto v = try_parse<E>(name)) return *v;
  throw std::invalid_argument(std::string("unknown ") + std::string(EnumNames<E>::type_name) +
                              " '" + std::string(name) + "'");
}

template <class E>
constexpr std::size_t index_of(E value) {
  return static_cast<std::size_t>(value);
}

inline constexpr std::array<Category, kCategoryCount> kAllCategories{
    Category::AddingSteps,          Category::ConflictingInfo, Category::CreatingBarriers,
    Category::FeedforwardAmbiguity, Category::HiddenInfo,      Category::InfoWithoutContext,
    Category::PrivacyMazes,         Category::VisualProminence};

inline constexpr std::array<FailureCategory, kFailureCategoryCount> kAllFailureCategories{
    FailureCategory::AutomationInstability,   FailureCategory::AgentInstability,
    FailureCategory::SecurityBarrier,         FailureCategory::ContentFormatLimitation,
    FailureCategory::NavigationFailure,       FailureCategory::InteractionFailure};

}  // namespace dpaudit
