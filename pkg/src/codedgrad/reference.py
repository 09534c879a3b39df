"""Published recoverability counts for the K=4, r=2 example.

Each row: label, type as (N0, N1, N2), counts for (MCC, UC_MMC, CPGC).
The full-gradient table prints its ninth row as "N2=0, N1=4, N0=1", which
describes five workers; the counts belong to type (N0, N1, N2) = (0, 4, 0),
which is what is stored here.
"""

SCHEMES = ("MCC", "UC_MMC", "CPGC")

FULL_GRADIENT = (
    ("N1", (0, 0, 4), (1, 1, 1)),
    ("N2", (0, 1, 3), (4, 4, 4)),
    ("N3", (1, 0, 3), (4, 4, 4)),
    ("N4", (0, 2, 2), (6, 6, 6)),
    ("N5", (1, 1, 2), (12, 8, 12)),
    ("N6", (2, 0, 2), (6, 2, 6)),
    ("N7", (0, 3, 1), (0, 4, 4)),
    ("N8", (1, 2, 1), (0, 4, 8)),
    ("N9", (0, 4, 0), (0, 1, 1)),  # printed label reads N0=1
)

PARTIAL_GRADIENT = (
    ("N1", (0, 0, 4), (1, 1, 1)),
    ("N2", (0, 1, 3), (4, 4, 4)),
    ("N3", (1, 0, 3), (4, 4, 4)),
    ("N4", (0, 2, 2), (6, 6, 6)),
    ("N5", (1, 1, 2), (12, 12, 12)),
    ("N6", (2, 0, 2), (6, 6, 6)),
    ("N7", (0, 3, 1), (0, 4, 4)),
    ("N8", (1, 2, 1), (0, 12, 12)),
    ("N9", (2, 1, 1), (0, 8, 8)),
    ("N10", (0, 4, 0), (0, 1, 1)),
    ("N11", (1, 3, 0), (0, 4, 4)),
)

LABEL_NOTES = {
    ("full", "N9"): "printed as N2=0,N1=4,N0=1 (five workers); matched against N2=0,N1=4,N0=0",
}

# coefficients of the CPGC full-gradient CDF over N1..N9
CPGC_CDF_COEFFICIENTS = (1, 4, 4, 6, 12, 6, 4, 8, 1)
