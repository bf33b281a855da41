//! Problem files: the `.copp` s-expression format, its serializer, and
//! generators for the gridworld, box-pushing and recycling-robot domains.
//!
//! ```text
//! (problem grid-3x3)                 ; optional
//! (domain gridworld)                 ; optional, used to group bench results
//! (fluents at_0_0 at_0_1 ...)
//! (init at_1_1)
//! (actions
//!   (up_1_1 :pre (at_1_1) :add (at_0_1) :del (at_1_1) :cost 1)
//!   ...)
//! (goals (g1 at_0_0) (g2 at_2_2) :true g1)
//! (sensor X
//!   (rule :action-in (up_* down_*) :emit vertical)
//!   (misreport :action-in (right_0_1) :emit vertical)   ; optional
//!   (catchall horizontal))
//! (sensor C ...)
//! (horizon 12)                       ; optional
//! (beta 0.5)                         ; optional
//! ```

mod gen;
mod parse;
mod serialize;
pub mod sexpr;

pub use gen::{
    gen_boxpush, gen_gridworld, gen_recycling, random_boxpush, random_gridworld, random_recycling, BoxPushConfig, Cell,
    Dir, RecyclingConfig,
};
pub use parse::parse;
pub use serialize::serialize;

use crate::model::{CandidateGoalSet, PlanningDomain};
use crate::observer::{ObserverId, SensorModel};

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub name: Option<String>,
    /// Domain family name, e.g. `gridworld`.
    pub family: Option<String>,
    pub domain: PlanningDomain,
    pub goals: CandidateGoalSet,
    /// Observer sensors, in file order. The actor's sensor is implicit.
    pub sensors: Vec<SensorModel>,
    pub horizon_hint: Option<usize>,
    pub beta: Option<f64>,
}

impl ProblemFile {
    pub fn sensor(&self, id: ObserverId) -> Option<&SensorModel> {
        self.sensors.iter().find(|s| s.observer() == id)
    }
}

impl PartialEq for PlanningDomain {
    fn eq(&self, other: &Self) -> bool {
        self.fluents() == other.fluents() && self.actions() == other.actions() && self.initial() == other.initial()
    }
}

impl PartialEq for SensorModel {
    fn eq(&self, other: &Self) -> bool {
        self.observer() == other.observer()
            && self.rules() == other.rules()
            && self.catchall() == other.catchall()
            && self.misreports() == other.misreports()
    }
}
