"""Built-in column layouts for the public flow datasets."""
from __future__ import annotations

# UNSW-NB15 published train/test CSVs (UNSW_NB15_training-set.csv / _testing-set.csv).
# Continuous columns get the log/sig treatment; small-domain counters and flags
# stay as ordinal categories.
UNSW_NUMERIC = (
    "id", "dur", "sbytes", "dbytes", "rate", "sload", "dload", "sinpkt", "dinpkt",
    "sjit", "djit", "stcpb", "dtcpb", "tcprtt", "synack", "ackdat", "response_body_len",
)
UNSW_CATEGORICAL = (
    "proto", "service", "state", "spkts", "dpkts", "sttl", "dttl", "sloss", "dloss",
    "swin", "dwin", "smean", "dmean", "trans_depth", "ct_srv_src", "ct_state_ttl",
    "ct_dst_ltm", "ct_src_dport_ltm", "ct_dst_sport_ltm", "ct_dst_src_ltm",
    "is_ftp_login", "ct_ftp_cmd", "ct_flw_http_mthd", "ct_src_ltm", "ct_srv_dst",
    "is_sm_ips_ports",
)
# header order of the published files
UNSW_ORDER = (
    "id", "dur", "proto", "service", "state", "spkts", "dpkts", "sbytes", "dbytes",
    "rate", "sttl", "dttl", "sload", "dload", "sloss", "dloss", "sinpkt", "dinpkt",
    "sjit", "djit", "swin", "stcpb", "dtcpb", "dwin", "tcprtt", "synack", "ackdat",
    "smean", "dmean", "trans_depth", "response_body_len", "ct_srv_src", "ct_state_ttl",
    "ct_dst_ltm", "ct_src_dport_ltm", "ct_dst_sport_ltm", "ct_dst_src_ltm",
    "is_ftp_login", "ct_ftp_cmd", "ct_flw_http_mthd", "ct_src_ltm", "ct_srv_dst",
    "is_sm_ips_ports", "attack_cat", "label",
)
UNSW_LABEL = "attack_cat"
UNSW_DROP = ("label",)  # binary normal/attack flag, a restatement of the target
UNSW_CLASSES = (
    "Analysis", "Backdoor", "DoS", "Exploits", "Fuzzers", "Generic", "Normal",
    "Reconnaissance", "Shellcode", "Worms",
)

# CICIDS-2017 MachineLearningCVE CSVs (headers carry stray leading spaces; matched stripped).
CICIDS_NUMERIC = (
    "Destination Port", "Flow Duration", "Total Fwd Packets", "Total Backward Packets",
    "Total Length of Fwd Packets", "Total Length of Bwd Packets",
    "Fwd Packet Length Max", "Fwd Packet Length Min", "Fwd Packet Length Mean",
    "Fwd Packet Length Std", "Bwd Packet Length Max", "Bwd Packet Length Min",
    "Bwd Packet Length Mean", "Bwd Packet Length Std", "Flow Bytes/s", "Flow Packets/s",
    "Flow IAT Mean", "Flow IAT Std", "Flow IAT Max", "Flow IAT Min",
    "Fwd IAT Total", "Fwd IAT Mean", "Fwd IAT Std", "Fwd IAT Max", "Fwd IAT Min",
    "Bwd IAT Total", "Bwd IAT Mean", "Bwd IAT Std", "Bwd IAT Max", "Bwd IAT Min",
    "Fwd PSH Flags", "Bwd PSH Flags", "Fwd URG Flags", "Bwd URG Flags",
    "Fwd Header Length", "Bwd Header Length", "Fwd Packets/s", "Bwd Packets/s",
    "Min Packet Length", "Max Packet Length", "Packet Length Mean", "Packet Length Std",
    "Packet Length Variance", "FIN Flag Count", "SYN Flag Count", "RST Flag Count",
    "PSH Flag Count", "ACK Flag Count", "URG Flag Count", "CWE Flag Count",
    "ECE Flag Count", "Down/Up Ratio", "Average Packet Size", "Avg Fwd Segment Size",
    "Avg Bwd Segment Size", "Fwd Header Length.1", "Fwd Avg Bytes/Bulk",
    "Fwd Avg Packets/Bulk", "Fwd Avg Bulk Rate", "Bwd Avg Bytes/Bulk",
    "Bwd Avg Packets/Bulk", "Bwd Avg Bulk Rate", "Subflow Fwd Packets",
    "Subflow Fwd Bytes", "Subflow Bwd Packets", "Subflow Bwd Bytes",
    "Init_Win_bytes_forward", "Init_Win_bytes_backward", "act_data_pkt_fwd",
    "min_seg_size_forward", "Active Mean", "Active Std", "Active Max", "Active Min",
    "Idle Mean", "Idle Std", "Idle Max", "Idle Min",
)
CICIDS_LABEL = "Label"

# Column names treated as endpoint addresses by schema inference.
ADDRESS_COLUMNS = frozenset({
    "srcip", "dstip", "src_ip", "dst_ip", "source ip", "destination ip", "sourceip",
    "destinationip", "src_addr", "dst_addr", "source_address", "destination_address",
    "ip_src", "ip_dst", "flow id", "flow_id",
})
