//! Published benchmark statistics, kept as reference data for consistency
//! checks against the task builder.

/// Evaluation task summary: name, training pairs, validation pairs, test
/// molecules, unique molecules, category.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalTaskRow {
    pub name: &'static str,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub n_mols: usize,
    pub category: &'static str,
}

const fn row(
    name: &'static str,
    n_train: usize,
    n_val: usize,
    n_test: usize,
    n_mols: usize,
    category: &'static str,
) -> EvalTaskRow {
    EvalTaskRow {
        name,
        n_train,
        n_val,
        n_test,
        n_mols,
        category,
    }
}

pub const EVAL_TASKS: [EvalTaskRow; 10] = [
    row("BDP", 2064, 230, 500, 2449, "CS"),
    row("BDQ", 4472, 497, 500, 4614, "CS"),
    row("BPQ", 4048, 450, 500, 6953, "CS"),
    row("DPQ", 2114, 235, 500, 2589, "CS"),
    row("BDPQ", 624, 70, 500, 802, "CS"),
    row("MPQ", 3132, 349, 500, 5384, "GT"),
    row("BDMQ", 601, 67, 500, 791, "CS"),
    row("BHMQ", 191, 22, 118, 333, "CS"),
    row("BMPQ", 373, 42, 191, 690, "CS"),
    row("HMPQ", 234, 26, 96, 417, "GT"),
];

/// Per-task reference scores of hit molecules: training medians and test
/// means, as `(letter, value)` lists in letter order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceScoreRow {
    pub name: &'static str,
    pub mps_train: &'static [(char, f64)],
    pub aps_test: &'static [(char, f64)],
}

pub const EVAL_REFERENCE_SCORES: [ReferenceScoreRow; 10] = [
    ReferenceScoreRow {
        name: "BDP",
        mps_train: &[('B', 0.51), ('D', 0.04), ('P', -0.23)],
        aps_test: &[('B', 0.34), ('D', 0.01), ('P', -2.33)],
    },
    ReferenceScoreRow {
        name: "BDQ",
        mps_train: &[('B', 0.55), ('D', 0.04), ('Q', 0.35)],
        aps_test: &[('B', 0.37), ('D', 0.01), ('Q', 0.21)],
    },
    ReferenceScoreRow {
        name: "BPQ",
        mps_train: &[('B', 0.52), ('P', -1.51), ('Q', 0.70)],
        aps_test: &[('B', 0.31), ('P', -2.87), ('Q', 0.41)],
    },
    ReferenceScoreRow {
        name: "DPQ",
        mps_train: &[('D', 0.06), ('P', -0.84), ('Q', 0.48)],
        aps_test: &[('D', 0.01), ('P', -3.32), ('Q', 0.36)],
    },
    ReferenceScoreRow {
        name: "BDPQ",
        mps_train: &[('B', 0.51), ('D', 0.04), ('P', -1.15), ('Q', 0.37)],
        aps_test: &[('B', 0.26), ('D', 0.02), ('P', -4.92), ('Q', 0.24)],
    },
    ReferenceScoreRow {
        name: "MPQ",
        mps_train: &[('M', 0.50), ('P', -0.44), ('Q', 0.72)],
        aps_test: &[('M', 0.71), ('P', -1.61), ('Q', 0.52)],
    },
    ReferenceScoreRow {
        name: "BDMQ",
        mps_train: &[('B', 0.54), ('D', 0.04), ('M', 0.45), ('Q', 0.35)],
        aps_test: &[('B', 0.34), ('D', 0.01), ('M', 0.58), ('Q', 0.19)],
    },
    ReferenceScoreRow {
        name: "BHMQ",
        mps_train: &[('B', 0.43), ('H', 0.74), ('M', 0.46), ('Q', 0.70)],
        aps_test: &[('B', 0.18), ('H', 0.34), ('M', 0.54), ('Q', 0.23)],
    },
    ReferenceScoreRow {
        name: "BMPQ",
        mps_train: &[('B', 0.49), ('M', 0.47), ('P', -0.76), ('Q', 0.69)],
        aps_test: &[('B', 0.33), ('M', 0.65), ('P', -2.27), ('Q', 0.38)],
    },
    ReferenceScoreRow {
        name: "HMPQ",
        mps_train: &[('H', 0.71), ('M', 0.50), ('P', -2.04), ('Q', 0.62)],
        aps_test: &[('H', 0.39), ('M', 0.65), ('P', -3.23), ('Q', 0.30)],
    },
];

/// All tasks with their unique training pair and molecule counts, in the
/// published order.
pub const ALL_TASKS: [(&str, usize, usize); 63] = [
    ("B", 42296, 54398),
    ("D", 116755, 60651),
    ("H", 13929, 21388),
    ("M", 110586, 116604),
    ("P", 105949, 149774),
    ("Q", 157863, 167041),
    ("BD", 11703, 9804),
    ("BH", 6676, 10657),
    ("BM", 4126, 5637),
    ("BP", 12197, 19360),
    ("BQ", 24577, 33303),
    ("DH", 1924, 2151),
    ("DM", 22834, 19359),
    ("DP", 19154, 16796),
    ("DQ", 26860, 19109),
    ("HM", 1247, 1786),
    ("HP", 10348, 18052),
    ("HQ", 5194, 7208),
    ("MP", 27554, 43224),
    ("MQ", 33192, 39643),
    ("PQ", 15874, 22621),
    ("BDH", 829, 997),
    ("BDM", 1423, 1595),
    ("BDP", 2294, 2449),
    ("BDQ", 4969, 4614),
    ("BHM", 380, 617),
    ("BHP", 5259, 9141),
    ("BHQ", 3100, 4619),
    ("BMP", 1125, 1841),
    ("BMQ", 2414, 3388),
    ("BPQ", 4498, 6953),
    ("DHM", 304, 301),
    ("DHP", 967, 1246),
    ("DHQ", 708, 790),
    ("DMP", 4805, 5427),
    ("DMQ", 6398, 6220),
    ("DPQ", 2349, 2589),
    ("HMP", 730, 1211),
    ("HMQ", 534, 749),
    ("HPQ", 3142, 5289),
    ("MPQ", 3481, 5384),
    ("BDHM", 83, 116),
    ("BDHP", 415, 543),
    ("BDHQ", 410, 493),
    ("BDMP", 321, 438),
    ("BDMQ", 668, 791),
    ("BDPQ", 694, 802),
    ("BHMP", 243, 421),
    ("BHMQ", 213, 333),
    ("BHPQ", 2102, 3560),
    ("BMPQ", 415, 690),
    ("DHMP", 162, 170),
    ("DHMQ", 130, 136),
    ("DHPQ", 302, 363),
    ("DMPQ", 577, 797),
    ("HMPQ", 260, 417),
    ("BDHMP", 42, 59),
    ("BDHMQ", 50, 72),
    ("BDHPQ", 186, 232),
    ("BDMPQ", 73, 119),
    ("BHMPQ", 120, 199),
    ("DHMPQ", 61, 64),
    ("BDHMPQ", 23, 33),
];

/// Simple-style evaluation prompt for MPQ on a published example molecule.
pub const MPQ_SIMPLE_PROMPT_MOLECULE: &str = "COC1COCCN(C(=O)c2ccno2)C1";
pub const MPQ_SIMPLE_PROMPT: &str = "Modify the molecule <SMILES> COC1COCCN(C(=O)c2ccno2)C1 </SMILES> to decrease its Mutagenicity, increase its Penalized octanol-water partition coefficient (penalized logP) value, and increase its QED value. Keep the modifications to the molecule structure as minimal as possible.";
