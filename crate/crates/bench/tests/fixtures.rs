use wbf_bench::{environment, observations};

#[test]
fn fixtures_are_deterministic_and_read_the_truth() {
    let env = environment("miniberry-30", 5);
    let a = observations(&env, 40, 9);
    assert_eq!(a, observations(&environment("miniberry-30", 5), 40, 9));
    assert_ne!(a, observations(&env, 40, 10));
    for o in &a {
        assert!(o.x < 30 && o.y < 30);
        assert_eq!(o.values, env.read_point(o.x, o.y));
    }
}
