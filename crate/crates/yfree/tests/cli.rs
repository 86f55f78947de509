//! CLI contract: exit codes on a scripted invocation matrix, and
//! byte-identical output across repeated runs.

use std::path::PathBuf;

use yfree::cli::run;

struct CliRun {
    code: i32,
    stdout: String,
    stderr: String,
}

fn yfree(args: &[String]) -> CliRun {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv: Vec<String> = std::iter::once("yfree".to_string())
        .chain(args.iter().cloned())
        .collect();
    let code = run(&argv, &mut out, &mut err);
    CliRun {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn args(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

struct Fixtures {
    _dir: tempfile::TempDir,
    middle42: PathBuf,
    v_family: PathBuf,
    planted: PathBuf,
    three_levels: PathBuf,
    level2_n4: PathBuf,
    malformed: PathBuf,
}

fn fixtures() -> Fixtures {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name);
    let write = |name: &str, text: &str| {
        let p = path(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let middle42 = path("middle42.fam");
    let r = yfree(&args(&[
        "construct",
        "--kind",
        "middle",
        "--n",
        "4",
        "--k",
        "2",
        "--out",
        middle42.to_str().unwrap(),
    ]));
    assert_eq!(r.code, 0, "{}", r.stderr);
    Fixtures {
        middle42,
        v_family: write("vfam.fam", "n=3\n1\n1,2\n1,3\n"),
        // an induced Y_2 planted on intervals of I(6)
        planted: write("planted.fam", "n=6\n1\n1,2\n1,2,3\n1,2,6\n"),
        three_levels: write("three.fam", "n=4\n1\n2\n3\n4\n1,2\n1,3\n1,4\n2,3\n2,4\n3,4\n1,2,3\n1,2,4\n1,3,4\n2,3,4\n"),
        level2_n4: write("level2.fam", "n=4\n1,2\n1,3\n1,4\n2,3\n2,4\n3,4\n"),
        malformed: write("bad.fam", "n=4\n5\n"),
        _dir: dir,
    }
}

#[test]
fn exit_code_matrix() {
    let fx = fixtures();
    let middle = fx.middle42.to_str().unwrap();
    let vfam = fx.v_family.to_str().unwrap();
    let planted = fx.planted.to_str().unwrap();
    let three = fx.three_levels.to_str().unwrap();
    let level2 = fx.level2_n4.to_str().unwrap();
    let bad = fx.malformed.to_str().unwrap();

    // (args, expected exit code, expected stdout fragment)
    let matrix: Vec<(Vec<String>, i32, &str)> = vec![
        // constructions
        (args(&["construct", "--kind", "middle", "--n", "3", "--k", "2"]), 0, "n=3"),
        (args(&["construct", "--kind", "kt", "--n", "4"]), 0, "n=4"),
        (
            args(&["construct", "--kind", "random", "--n", "5", "--k", "2", "--seed", "11"]),
            0,
            "n=5",
        ),
        // detection: a witness prints, freeness prints FREE; both run fine
        (args(&["detect", "--pattern", "v", "--induced", "--family", vfam]), 0, "x -> 1"),
        (args(&["detect", "--pattern", "y:2", "--induced", "--family", middle]), 0, "FREE"),
        (args(&["detect", "--pattern", "chain:2", "--family", middle]), 0, "c1 -> "),
        (args(&["detect", "--pattern", "butterfly", "--family", level2]), 0, "FREE"),
        // certification: tight bound, and a planted violation
        (args(&["certify", "--family", middle, "--k", "2"]), 0, "count=8 bound=8 OK"),
        (args(&["certify", "--family", planted, "--k", "2"]), 1, "VIOLATION"),
        (args(&["certify", "--family", middle, "--k", "2", "--pi", "3,1,2,4"]), 0, "OK"),
        // search
        (
            args(&["search", "--n", "3", "--patterns", "y:2,yprime:2", "--induced", "--mode", "exhaustive"]),
            0,
            "max=6",
        ),
        (
            args(&["search", "--n", "4", "--patterns", "v,lambda", "--mode", "bnb", "--budget", "1000000"]),
            0,
            "max=6",
        ),
        // the two-chain-free maximum is the two largest levels
        (
            args(&["search", "--n", "3", "--patterns", "chain:3", "--mode", "exhaustive"]),
            0,
            "max=6",
        ),
        // LYM: two middle levels are tight at k=2; three levels exceed it
        (args(&["lym", "--family", middle, "--k", "2"]), 0, "tight=true"),
        (args(&["lym", "--family", three, "--k", "2"]), 1, "holds=false"),
        (args(&["lym", "--family", level2, "--k", "1"]), 0, "sum=1"),
        // double counting
        (args(&["doublecount", "--family", level2]), 0, "equal=true"),
        // usage errors
        (args(&["certify", "--family", middle]), 2, ""),
        (args(&["construct", "--kind", "middle", "--n", "4"]), 2, ""),
        (args(&["construct", "--kind", "random", "--n", "5", "--k", "2"]), 2, ""),
        (args(&["detect", "--pattern", "w:9", "--family", middle]), 2, ""),
        (args(&["certify", "--family", "/nonexistent.fam", "--k", "2"]), 2, ""),
        (args(&["certify", "--family", bad, "--k", "2"]), 2, ""),
        (args(&["search", "--n", "4", "--patterns", "v", "--mode", "bnb"]), 2, ""),
        // k=0 is a computable (if hopeless) bound, so this is a violation
        (args(&["lym", "--family", vfam, "--k", "0"]), 1, "holds=false"),
    ];

    for (argv, expected, fragment) in &matrix {
        let r = yfree(argv);
        assert_eq!(
            r.code, *expected,
            "args {argv:?}\nstdout: {}\nstderr: {}",
            r.stdout, r.stderr
        );
        if !fragment.is_empty() {
            assert!(
                r.stdout.contains(fragment),
                "args {argv:?}: missing {fragment:?} in {}",
                r.stdout
            );
        }
        if *expected == 2 {
            assert!(!r.stderr.is_empty(), "args {argv:?}: silent usage error");
        }
    }
}

#[test]
fn lym_error_cases_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let with_empty = dir.path().join("empty.fam");
    std::fs::write(&with_empty, "n=3\n-\n1\n").unwrap();
    let r = yfree(&args(&["lym", "--family", with_empty.to_str().unwrap(), "--k", "2"]));
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("empty set"), "{}", r.stderr);
}

#[test]
fn runs_are_byte_identical() {
    let fx = fixtures();
    let middle = fx.middle42.to_str().unwrap();
    let planted = fx.planted.to_str().unwrap();
    let invocations: Vec<Vec<String>> = vec![
        args(&["construct", "--kind", "middle", "--n", "5", "--k", "3"]),
        args(&["construct", "--kind", "random", "--n", "6", "--k", "2", "--seed", "42"]),
        args(&["detect", "--pattern", "y:2", "--induced", "--family", middle]),
        args(&["certify", "--family", middle, "--k", "2"]),
        args(&["certify", "--family", planted, "--k", "2"]),
        args(&[
            "search", "--n", "4", "--patterns", "y:2,yprime:2", "--induced", "--mode", "bnb",
            "--budget", "1000000",
        ]),
        args(&["lym", "--family", middle, "--k", "2"]),
        args(&["doublecount", "--family", middle]),
    ];
    for argv in &invocations {
        let first = yfree(argv);
        let second = yfree(argv);
        assert_eq!(first.code, second.code, "args {argv:?}");
        assert_eq!(first.stdout, second.stdout, "args {argv:?}");
    }
}

#[test]
fn certificate_file_round_trips_through_the_verifier() {
    let fx = fixtures();
    let dir = tempfile::tempdir().unwrap();
    let cert_path = dir.path().join("middle42.cert");
    let r = yfree(&args(&[
        "certify",
        "--family",
        fx.middle42.to_str().unwrap(),
        "--k",
        "2",
        "--cert",
        cert_path.to_str().unwrap(),
    ]));
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout, "count=8 bound=8 OK\n");
    let text = std::fs::read_to_string(&cert_path).unwrap();
    let cert = yfree::certio::parse_certificate(&text).unwrap();
    let family = yfree::lattice::parse_family(
        &std::fs::read_to_string(&fx.middle42).unwrap(),
    )
    .unwrap();
    let report = yfree::grouping::verify_certificate(&cert, &family);
    assert!(report.ok, "{:?}", report.diagnostics);
    assert_eq!(yfree::certio::serialize_certificate(&cert), text);
}

#[test]
fn parallel_search_omits_the_node_count() {
    let argv = args(&[
        "search", "--n", "4", "--patterns", "v,lambda", "--mode", "bnb", "--budget", "1000000",
        "--jobs", "3",
    ]);
    let r = yfree(&argv);
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("max=6\nexhaustive=true\n"), "{}", r.stdout);
    assert!(!r.stdout.contains("nodes="), "{}", r.stdout);
    let again = yfree(&argv);
    assert_eq!(r.stdout, again.stdout);
}
