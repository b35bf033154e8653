#pragma once

#include <map>
#include <optional>
#include <string>

namespace threatrank::knowledge {

struct AttackTechnique {
  std::string name;
  std::string tactic;
};

// Vendored subset of the ATT&CK technique catalog (id -> name/tactic).
// Mappings change slowly; a static asset keeps enrichment deterministic and
// lets fabricated technique ids fail dictionary validation.
inline const std::map<std::string, AttackTechnique>& attack_catalog() {
  static const std::map<std::string, AttackTechnique> catalog = {
      {"T1003", {"OS Credential Dumping", "credential-access"}},
      {"T1005", {"Data from Local System", "collection"}},
      {"T1012", {"Query Registry", "discovery"}},
      {"T1021", {"Remote Services", "lateral-movement"}},
      {"T1027", {"Obfuscated Files or Information", "defense-evasion"}},
      {"T1036", {"Masquerading", "defense-evasion"}},
      {"T1041", {"Exfiltration Over C2 Channel", "exfiltration"}},
      {"T1046", {"Network Service Discovery", "discovery"}},
      {"T1047", {"Windows Management Instrumentation", "execution"}},
      {"T1055", {"Process Injection", "defense-evasion"}},
      {"T1059", {"Command and Scripting Interpreter", "execution"}},
      {"T1068", {"Exploitation for Privilege Escalation", "privilege-escalation"}},
      {"T1070", {"Indicator Removal", "defense-evasion"}},
      {"T1078", {"Valid Accounts", "initial-access"}},
      {"T1082", {"System Information Discovery", "discovery"}},
      {"T1083", {"File and Directory Discovery", "discovery"}},
      {"T1090", {"Proxy", "command-and-control"}},
      {"T1105", {"Ingress Tool Transfer", "command-and-control"}},
      {"T1110", {"Brute Force", "credential-access"}},
      {"T1133", {"External Remote Services", "initial-access"}},
      {"T1136", {"Create Account", "persistence"}},
      {"T1140", {"Deobfuscate/Decode Files or Information", "defense-evasion"}},
      {"T1189", {"Drive-by Compromise", "initial-access"}},
      {"T1190", {"Exploit Public-Facing Application", "initial-access"}},
      {"T1203", {"Exploitation for Client Execution", "execution"}},
      {"T1210", {"Exploitation of Remote Services", "lateral-movement"}},
      {"T1211", {"Exploitation for Defense Evasion", "defense-evasion"}},
      {"T1212", {"Exploitation for Credential Access", "credential-access"}},
      {"T1218", {"System Binary Proxy Execution", "defense-evasion"}},
      {"T1485", {"Data Destruction", "impact"}},
      {"T1486", {"Data Encrypted for Impact", "impact"}},
      {"T1489", {"Service Stop", "impact"}},
      {"T1490", {"Inhibit System Recovery", "impact"}},
      {"T1498", {"Network Denial of Service", "impact"}},
      {"T1505", {"Server Software Component", "persistence"}},
      {"T1543", {"Create or Modify System Process", "persistence"}},
      {"T1547", {"Boot or Logon Autostart Execution", "persistence"}},
      {"T1548", {"Abuse Elevation Control Mechanism", "privilege-escalation"}},
      {"T1550", {"Use Alternate Authentication Material", "lateral-movement"}},
      {"T1552", {"Unsecured Credentials", "credential-access"}},
      {"T1557", {"Adversary-in-the-Middle", "credential-access"}},
      {"T1566", {"Phishing", "initial-access"}},
      {"T1570", {"Lateral Tool Transfer", "lateral-movement"}},
      {"T1574", {"Hijack Execution Flow", "persistence"}},
      {"T1583", {"Acquire Infrastructure", "resource-development"}},
      {"T1587", {"Develop Capabilities", "resource-development"}},
      {"T1590", {"Gather Victim Network Information", "reconnaissance"}},
      {"T1595", {"Active Scanning", "reconnaissance"}},
  };
  return catalog;
}

inline std::optional<AttackTechnique> lookup_technique(const std::string& id) {
  const auto& cat = attack_catalog();
  auto it = cat.find(id);
  if (it == cat.end()) return std::nullopt;
  return it->second;
}

}  // namespace threatrank::knowledge
