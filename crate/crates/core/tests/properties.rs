use partitest::model::{GroupedCounts, GroupedData, Likelihood, ModelSpec, PartitionLikelihood};
use partitest::partition::canonicalize;
use partitest::{MembershipVector, Partition, Prior};
use proptest::prelude::*;
use proptest::sample::subsequence;

fn labels(max_k: usize) -> impl Strategy<Value = Vec<usize>> {
    (1..=max_k).prop_flat_map(|k| prop::collection::vec(0..k, k))
}

fn with_perm(max_k: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    labels(max_k).prop_flat_map(|l| {
        let k = l.len();
        (Just(l), Just((0..k).collect::<Vec<_>>()).prop_shuffle())
    })
}

fn partition_of(l: &[usize]) -> Partition {
    canonicalize(&MembershipVector::new(l.to_vec()).unwrap())
}

fn priors(k: usize) -> [Prior; 4] {
    [
        Prior::Uniform,
        Prior::BetaBinomial { alpha: 1.0, beta: k as f64 },
        Prior::BetaBinomial { alpha: 0.7, beta: 2.5 },
        Prior::DirichletProcess { alpha: 0.8 },
    ]
}

proptest! {
    #[test]
    fn canonical_form_is_idempotent_and_label_free((l, perm) in with_perm(9)) {
        let p = partition_of(&l);
        let again = partition_of(&p.labels().collect::<Vec<_>>());
        prop_assert_eq!(&again, &p);
        let relabeled: Vec<usize> = l.iter().map(|&x| perm[x]).collect();
        prop_assert_eq!(partition_of(&relabeled), p);
    }

    #[test]
    fn prior_mass_is_exchangeable((l, perm) in with_perm(8)) {
        let p = partition_of(&l);
        let k = p.k();
        let q = p.permute(&perm);
        prop_assert_eq!(q.block_sizes().len(), p.block_sizes().len());
        for prior in priors(k) {
            prop_assert!((prior.log_pmf(&p) - prior.log_pmf(&q)).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugate_marginals_add_over_blocks(
        l in labels(7),
        succ in prop::collection::vec(0u64..40, 7),
    ) {
        let k = l.len();
        let counts = GroupedCounts::new(succ[..k].to_vec(), vec![40; k]).unwrap();
        let data: GroupedData = counts.into();
        let lik = Likelihood::new(ModelSpec::binomial(), &data).unwrap();
        let p = partition_of(&l);
        let total = lik.log_marginal(&p).unwrap();
        let by_block: f64 = p
            .blocks()
            .iter()
            .map(|b| {
                let sub = Likelihood::new(ModelSpec::binomial(), &data.subset(b)).unwrap();
                sub.log_marginal(&Partition::null(b.len())).unwrap()
            })
            .sum();
        prop_assert!((total - by_block).abs() < 1e-9 * total.abs().max(1.0));
    }

    #[test]
    fn restriction_keeps_equalities(l in labels(8), pick in subsequence((0..8).collect::<Vec<usize>>(), 1..8)) {
        let p = partition_of(&l);
        let groups: Vec<usize> = pick.into_iter().filter(|&g| g < p.k()).collect();
        prop_assume!(!groups.is_empty());
        let r = p.restrict(&groups);
        for (a, &ga) in groups.iter().enumerate() {
            for (b, &gb) in groups.iter().enumerate() {
                prop_assert_eq!(r.same_block(a, b), p.same_block(ga, gb));
            }
        }
    }
}
