use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn ukcs() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ukcs"));
    c.env_remove("UKCS_CONFIG").env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str], stdin: &[u8]) -> Output {
    run_cmd(ukcs().args(args), stdin)
}

fn run_cmd(cmd: &mut Command, stdin: &[u8]) -> Output {
    let mut child = cmd
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn ukcs");
    // the process may exit before reading its input
    if let Err(e) = child.stdin.take().unwrap().write_all(stdin) {
        assert_eq!(e.kind(), std::io::ErrorKind::BrokenPipe, "{e}");
    }
    child.wait_with_output().unwrap()
}

fn ok(out: &Output) -> &[u8] {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    &out.stdout
}

fn langid_data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data/langid")
        .join(name)
}

#[test]
fn romanize_round_trip_is_byte_identical() {
    let input = "Зараз у нас є 4-місячні миші\r\nOK, добре\n\nЦг · ⟦x⟧ Ёж\tїжак".as_bytes();
    let rom = run(&["romanize"], input);
    let rom = ok(&rom).to_vec();
    assert!(String::from_utf8_lossy(&rom).starts_with("Zaraz u nas je 4-misjačni myši\r\n"));
    let back = run(&["deromanize"], &rom);
    assert_eq!(ok(&back), input);
}

#[test]
fn strict_and_lenient_faults() {
    let input = b"dobre\n\xff bad\n\xe2\x9f\xa6 unbalanced\n";
    let strict = run(&["deromanize"], input);
    assert_eq!(strict.status.code(), Some(2));

    let lenient = run(&["--lenient", "deromanize"], input);
    let mut expected = "добре\n".as_bytes().to_vec();
    expected.extend_from_slice(&input[6..]);
    assert_eq!(ok(&lenient), expected);

    let dropped = run(&["--lenient", "--drop-faulty", "deromanize"], input);
    assert_eq!(ok(&dropped), "добре\n".as_bytes());
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_eq!(run(&["no-such-command"], b"").status.code(), Some(1));
    assert_eq!(run(&["dce-select"], b"").status.code(), Some(1));
    assert_eq!(run(&["--help"], b"").status.code(), Some(0));
    assert_eq!(run(&["--version"], b"").status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[noise]\np_add_punkt = 0.1\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "noise"], b"x\n");
    assert_eq!(out.status.code(), Some(1));
    let out = run_cmd(ukcs().env("UKCS_CONFIG", &cfg).arg("noise"), b"x\n");
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "[noise]\np_drop_initial_cap = 0\np_lowercase_all = 1\np_uppercase_span = 0\np_drop_final_punct = 0\np_add_punct = 0\n",
    )
    .unwrap();
    let out = run_cmd(
        ukcs().env("UKCS_CONFIG", &cfg).arg("noise"),
        b"Hello World.\n",
    );
    assert_eq!(ok(&out), b"hello world.\n");
}

#[test]
fn inca_train_encode_decode() {
    let dir = tempfile::tempdir().unwrap();
    let vocab = dir.path().join("vocab.tsv");
    let corpus = "My iPhone is new\niPhone sales\niPhone again\nUSA and USA\n".repeat(2);
    let out = run(
        &[
            "inca-train",
            "-o",
            vocab.to_str().unwrap(),
            "--source",
            "test",
        ],
        corpus.as_bytes(),
    );
    ok(&out);
    let text = std::fs::read_to_string(&vocab).unwrap();
    assert!(text.contains("# min_count=2"));
    assert!(text.contains("iPhone\t6"));
    assert!(text.contains("USA\t4"));

    let input = "My IPHONE iPhone usa\nÉCOLE straße\n";
    let enc = run(
        &["inca-encode", "--vocab", vocab.to_str().unwrap()],
        input.as_bytes(),
    );
    let enc = ok(&enc).to_vec();
    assert!(String::from_utf8_lossy(&enc)
        .starts_with("my <all-uppercase> iphone iphone <all-lowercase> usa"));
    let dec = run(&["inca-decode", "--vocab", vocab.to_str().unwrap()], &enc);
    assert_eq!(ok(&dec), input.as_bytes());

    let dangling = run(
        &["inca-decode", "--vocab", vocab.to_str().unwrap()],
        b"word <titlecase>\n",
    );
    assert_eq!(dangling.status.code(), Some(2));
    let missing = run(&["inca-encode"], b"x\n");
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn noise_is_deterministic_across_workers() {
    let input: String = (0..5000)
        .map(|i| format!("Sentence number {i} is Here.\n"))
        .collect();
    let a = run(
        &["--workers", "1", "noise", "--seed", "7"],
        input.as_bytes(),
    );
    let b = run(
        &["--workers", "4", "noise", "--seed", "7"],
        input.as_bytes(),
    );
    let c = run(
        &["--workers", "1", "noise", "--seed", "8"],
        input.as_bytes(),
    );
    assert_eq!(ok(&a), ok(&b));
    assert_ne!(ok(&a), ok(&c));
    assert_ne!(ok(&a), input.as_bytes());
}

fn bitext() -> String {
    let mut s = String::new();
    for i in 0..2000 {
        match i % 5 {
            0 => s.push_str(&format!(
                "Věta číslo {i} je tady\tРечення номер {i} тут є\n"
            )),
            1 => s.push_str(&format!(
                "Krátká věta {i}\tДуже довге речення номер {i} яке не пасує зовсім\n"
            )),
            2 => s.push_str(&format!(
                "Pište na info@example.cz {i}\tПишіть нам на пошту сюди {i}\n"
            )),
            3 => s.push_str("bez tabulátoru\n"),
            _ => s.push_str(&format!("Jedu do Brna {i}\tЇду до Києва {i}\n")),
        }
    }
    s
}

#[test]
fn filter_parallel_output_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("stats.json");
    let input = bitext();
    let one = run(
        &[
            "--workers",
            "1",
            "--stats-out",
            stats.to_str().unwrap(),
            "filter-parallel",
        ],
        input.as_bytes(),
    );
    let four = run(&["--workers", "4", "filter-parallel"], input.as_bytes());
    assert_eq!(ok(&one), ok(&four));
    let kept = String::from_utf8(one.stdout.clone()).unwrap();
    assert_eq!(kept.lines().count(), 400);
    assert!(kept.lines().all(|l| l.starts_with("Věta číslo")));

    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(doc["command"], "filter-parallel");
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["config"]["filter"]["ratio_max"], 1.5);
    let s = &doc["stats"];
    assert_eq!(s["total"], 2000);
    assert_eq!(s["kept"], 400);
    assert_eq!(s["rejected"]["length-ratio"], 400);
    assert_eq!(s["rejected"]["email"], 400);
    assert_eq!(s["rejected"]["missing-tab"], 400);
    assert_eq!(s["rejected"]["municipality-lexicon"], 400);

    let exempt = run(
        &["filter-parallel", "--corpus-tag", "XLEnt", "--no-rules"],
        input.as_bytes(),
    );
    assert_eq!(String::from_utf8_lossy(ok(&exempt)).lines().count(), 1600);
}

#[test]
fn filter_mono_limits() {
    let long_uk = "ї".repeat(300);
    let input = format!("коротко\n{long_uk}\n\n   \nok\u{7}\n");
    let out = run(&["filter-mono", "--lang", "uk"], input.as_bytes());
    assert_eq!(ok(&out), "коротко\nok\n".as_bytes());
}

#[test]
fn langid_train_and_detect() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.txt");
    let lang = |l: &str| format!("{l}={}", langid_data(&format!("{l}.train.txt")).display());
    let out = run(
        &[
            "langid-train",
            "--lang",
            &lang("cs"),
            "--lang",
            &lang("uk"),
            "--lang",
            &lang("ru"),
            "-k",
            "1000",
            "-o",
            model.to_str().unwrap(),
        ],
        b"",
    );
    ok(&out);
    let m = model.to_str().unwrap();
    let labelled = run(
        &["langid", "--model", m],
        "Dobrý den, jak se máte?\nДобрий день, як справи?\n12345\n".as_bytes(),
    );
    let text = String::from_utf8(ok(&labelled).to_vec()).unwrap();
    let langs: Vec<&str> = text
        .lines()
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    assert_eq!(langs, ["cs", "uk", "und"]);

    let kept = run(
        &["langid", "--model", m, "--keep", "cs"],
        "Dobrý den, jak se máte?\nДобрий день, як справи?\n".as_bytes(),
    );
    assert_eq!(ok(&kept), "Dobrý den, jak se máte?\n".as_bytes());

    let bitext = "Uložit změny v dokumentu\tЗберегти зміни в документі\nUložit změny v dokumentu\tСохранить изменения в документе\n";
    let filtered = run(
        &["filter-parallel", "--langid-model", m, "--no-rules"],
        bitext.as_bytes(),
    );
    assert_eq!(String::from_utf8_lossy(ok(&filtered)).lines().count(), 1);
}

#[test]
fn dce_select_ids_and_bitext_join() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("scores.tsv");
    let bitext = dir.path().join("bitext.tsv");
    std::fs::write(
        &scores,
        "a\t2.0\t2.0\nb\t1.0\t1.0\nc\t1.0\t3.0\nd\t0.5\t0.5\n",
    )
    .unwrap();
    std::fs::write(&bitext, "A\tа\nB\tб\nC\tц\nD\tд\n").unwrap();
    let ids = run(
        &[
            "dce-select",
            "--scores",
            scores.to_str().unwrap(),
            "--top-n",
            "2",
        ],
        b"",
    );
    assert_eq!(ok(&ids), b"b\nd\n");
    let joined = run(
        &[
            "dce-select",
            "--scores",
            scores.to_str().unwrap(),
            "--ratio",
            "0.5",
            "--authentic-count",
            "6",
            "--bitext",
            bitext.to_str().unwrap(),
        ],
        b"",
    );
    assert_eq!(ok(&joined), "A\tа\nB\tб\nD\tд\n".as_bytes());

    let dup = run(&["dce-select", "--top-n", "1"], b"a\t1\t1\na\t2\t2\n");
    assert_eq!(dup.status.code(), Some(2));
}
