#!/usr/bin/env python3
"""Convert the UCI User Knowledge Modeling spreadsheet into CSV files.

Usage:
    python scripts/convert_uci.py "Data_User_Modeling_Dataset_Hamdi Tolga KAHRAMAN.xls"

Writes data/user_knowledge_train.csv (258 rows), data/user_knowledge_test.csv
(145 rows) and data/user_knowledge.csv (both, training rows first).
Requires pandas and xlrd.
"""

import argparse
from pathlib import Path

import pandas as pd

COLUMNS = ["STG", "SCG", "STR", "LPR", "PEG", "UNS"]
SHEETS = {"Training_Data": "train", "Test_Data": "test"}


def load_sheet(path, sheet):
    frame = pd.read_excel(path, sheet_name=sheet)
    frame = frame.iloc[:, : len(COLUMNS)]
    frame.columns = [str(c).strip() for c in frame.columns]
    frame = frame.dropna(how="all")
    if list(frame.columns) != COLUMNS:
        raise SystemExit(f"{sheet}: unexpected columns {list(frame.columns)}")
    frame["UNS"] = frame["UNS"].astype(str).str.strip()
    return frame


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("xls", type=Path)
    parser.add_argument("--out-dir", type=Path, default=Path(__file__).resolve().parent.parent / "data")
    args = parser.parse_args()

    args.out_dir.mkdir(parents=True, exist_ok=True)
    parts = []
    for sheet, suffix in SHEETS.items():
        frame = load_sheet(args.xls, sheet)
        frame.to_csv(args.out_dir / f"user_knowledge_{suffix}.csv", index=False)
        print(f"{sheet}: {len(frame)} rows")
        parts.append(frame)
    combined = pd.concat(parts, ignore_index=True)
    combined.to_csv(args.out_dir / "user_knowledge.csv", index=False)
    print(f"combined: {len(combined)} rows")


if __name__ == "__main__":
    main()
