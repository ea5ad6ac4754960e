//! The heterogeneous-receiver model: belief coupling through the
//! representative receiver, the sender's value function and virtual density,
//! receiver partitions under a policy, and the sender's expected payoff.

mod beliefs;
mod joint;
mod partition;
mod simulate;
mod value;

pub use beliefs::{cutoff_c, cutoff_c_slope, cutoff_p, message_posteriors, posterior_update, Policy, Prior};
pub use joint::{GridJoint, JointDensityCP, JointSpec, Marginal, MarginalSpec, JOINT_MASS_TOL};
pub use partition::{partition, partition_measures, sender_payoff, PartitionMeasures, ReceiverPartition};
pub use simulate::{simulate_population, SimulationResult};
pub use value::{
    build_value_table, virtual_density_common_cost, virtual_density_common_prior, ValueTable, MIN_VALUE_GRID_N,
};
