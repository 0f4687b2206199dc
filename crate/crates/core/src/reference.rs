//! Published reference results for the ROI-based and attention-based potato
//! leaf classifiers, kept as regression fixtures.
//!
//! Confusion matrices are `[actual][predicted]` in `EB, LB, HL` order.
//! Summary quadruples are accuracy (percent) followed by macro precision,
//! macro recall and F-measure (ratios) exactly as printed.

use crate::detection::ClassLabel::{self, EarlyBlight, HealthyLeaves, LateBlight};
use crate::metrics::PrintedSummary;
use crate::saliency::RowAverage;

pub const ROI_TESTING_CM: [[u64; 3]; 3] = [[1197, 27, 9], [16, 753, 7], [3, 0, 20]];
pub const ROI_CROSS_CM: [[u64; 3]; 3] = [[908, 38, 54], [98, 805, 97], [41, 0, 111]];
pub const ATTENTION_TESTING_CM: [[u64; 3]; 3] = [[1023, 22, 12], [66, 621, 2], [0, 1, 22]];
pub const ATTENTION_CROSS_CM: [[u64; 3]; 3] = [[865, 3, 21], [102, 551, 92], [35, 1, 102]];

pub const ROI_TESTING_PRINTED: PrintedSummary = PrintedSummary {
    accuracy_pct: 96.95,
    precision: 0.8351,
    recall: 0.9369,
    f_measure: 0.8745,
};
pub const ROI_CROSS_PRINTED: PrintedSummary = PrintedSummary {
    accuracy_pct: 84.76,
    precision: 0.7486,
    recall: 0.8144,
    f_measure: 0.7655,
};
pub const ATTENTION_TESTING_PRINTED: PrintedSummary = PrintedSummary {
    accuracy_pct: 94.17,
    precision: 0.8382,
    recall: 0.9418,
    f_measure: 0.8870,
};
pub const ATTENTION_CROSS_PRINTED: PrintedSummary = PrintedSummary {
    accuracy_pct: 85.66,
    precision: 0.7767,
    recall: 0.8272,
    f_measure: 0.8012,
};

/// Published ROI detector localisation scores (percent). Their exact
/// procedure is unknown, so they are informational only.
pub const ROI_DETECTOR_OVERLAP_PCT: (f64, f64) = (91.85, 83.06);

/// A saliency table row: dataset name, per-class `(class, precision %, recall %)`
/// and the printed row averages.
pub struct SaliencyRowFixture {
    pub dataset: &'static str,
    pub per_class: [(ClassLabel, f64, f64); 3],
    pub printed_average: RowAverage,
}

pub const SALIENCY_ROWS: [SaliencyRowFixture; 3] = [
    SaliencyRowFixture {
        dataset: "PV",
        per_class: [(EarlyBlight, 66.17, 30.50), (LateBlight, 49.92, 53.03), (HealthyLeaves, 86.80, 44.47)],
        printed_average: RowAverage {
            precision_pct: 67.63,
            recall_pct: 42.67,
        },
    },
    SaliencyRowFixture {
        dataset: "org-CPRI",
        per_class: [(EarlyBlight, 12.95, 24.85), (LateBlight, 10.65, 25.33), (HealthyLeaves, 68.57, 24.87)],
        printed_average: RowAverage {
            precision_pct: 30.72,
            recall_pct: 25.12,
        },
    },
    SaliencyRowFixture {
        dataset: "seg-CPRI",
        per_class: [(EarlyBlight, 33.05, 17.47), (LateBlight, 29.87, 15.46), (HealthyLeaves, 90.71, 24.24)],
        printed_average: RowAverage {
            precision_pct: 74.64,
            recall_pct: 57.17,
        },
    },
];

/// Printed overall average over the three saliency rows.
pub const SALIENCY_OVERALL_PRINTED: RowAverage = RowAverage {
    precision_pct: 49.92,
    recall_pct: 28.91,
};
