//! Small named instances shared by tests, benches, and documentation.

use crate::metric::MetricSpace;
use crate::model::{Client, FairInstance};

/// Line metric with facilities at 0 and 10, color-0 clients at 1 and 9,
/// color-1 clients at 2 and 8, k = 2 and exact half/half fairness.
///
/// Point ids: 0 and 1 are the facilities, then clients at 1, 2, 9, 8.
/// The optimum serves clients 0,1 from facility 0 and 2,3 from facility 1
/// at cost 6.
pub fn t1() -> FairInstance {
    let metric = MetricSpace::line(&[0.0, 10.0, 1.0, 2.0, 9.0, 8.0]).expect("line metric");
    let clients = vec![
        Client { point: 2, color: 0 },
        Client { point: 3, color: 1 },
        Client { point: 4, color: 0 },
        Client { point: 5, color: 1 },
    ];
    FairInstance::new(
        metric,
        clients,
        vec![0, 1],
        2,
        vec![0.5, 0.5],
        vec![0.5, 0.5],
    )
    .expect("valid instance")
}
