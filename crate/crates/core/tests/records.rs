use burstlab::lm::{score_document, train_ngram, write_records, NgramConfig, RecordReader};
use burstlab::{DocScore, Error};

fn scored() -> (usize, Vec<DocScore>) {
    let corpus: Vec<Vec<&str>> = [
        "the cat sat on the mat and the dog sat on the log",
        "a dog and a cat met on a mat",
        "the log was on the mat",
    ]
    .iter()
    .map(|s| s.split(' ').collect())
    .collect();
    let model = train_ngram(&corpus, &NgramConfig { alpha: 0.1, ..Default::default() }).unwrap();
    let docs = corpus
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let ids = model.vocab().encode(d.iter().copied());
            score_document(&model, &format!("doc{i}"), &ids).unwrap()
        })
        .collect();
    (model.vocab().len(), docs)
}

#[test]
fn write_then_read_is_identity() {
    let (v, docs) = scored();
    let mut buf = Vec::new();
    write_records(&mut buf, v, &docs).unwrap();
    let reader = RecordReader::<_, f64>::new(buf.as_slice()).unwrap();
    assert_eq!(reader.vocab_size(), v);
    let back: Vec<DocScore> = reader.collect::<Result<_, _>>().unwrap();
    assert_eq!(back.len(), docs.len());
    for (a, b) in docs.iter().zip(&back) {
        assert_eq!(a.doc_id, b.doc_id);
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.token_id, y.token_id);
            assert_eq!(x.rank, y.rank);
            assert_eq!(x.prob.to_bits(), y.prob.to_bits());
            assert_eq!(x.cum_prob.to_bits(), y.cum_prob.to_bits());
            assert_eq!(x.logprob.to_bits(), y.logprob.to_bits());
        }
    }
}

#[test]
fn f32_reader_narrows() {
    let (v, docs) = scored();
    let mut buf = Vec::new();
    write_records(&mut buf, v, &docs).unwrap();
    let back: Vec<_> = RecordReader::<_, f32>::new(buf.as_slice())
        .unwrap()
        .collect::<Result<Vec<_>, _>>()
        .unwrap();
    assert_eq!(back[0].records[0].prob, docs[0].records[0].prob as f32);
}

fn read_all(text: &str) -> Vec<Result<DocScore, Error>> {
    RecordReader::<_, f64>::new(text.as_bytes()).unwrap().collect()
}

const HEADER: &str = r#"{"format":"burstlab-records","version":1,"vocab_size":10}"#;

#[test]
fn missing_header() {
    let r = RecordReader::<_, f64>::new(r#"{"doc_id":"d","records":[]}"#.as_bytes());
    assert!(matches!(r, Err(Error::MissingHeader)));
    assert!(matches!(RecordReader::<_, f64>::new(&b""[..]), Err(Error::MissingHeader)));
}

#[test]
fn malformed_line_names_its_number() {
    let text = format!(
        "{HEADER}\n{}\nnot json\n",
        r#"{"doc_id":"a","records":[{"token_id":1,"rank":1,"prob":0.5,"cum_prob":0.5}]}"#
    );
    let out = read_all(&text);
    assert!(out[0].is_ok());
    match &out[1] {
        Err(Error::Malformed { line, .. }) => assert_eq!(*line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn invariant_violations() {
    let cases = [
        (r#"{"token_id":1,"rank":1,"prob":0.5,"cum_prob":0.4}"#, "inconsistent record"),
        (r#"{"token_id":1,"rank":0,"prob":0.5,"cum_prob":0.5}"#, "rank"),
        (r#"{"token_id":1,"rank":11,"prob":0.5,"cum_prob":0.5}"#, "rank"),
        (r#"{"token_id":10,"rank":1,"prob":0.5,"cum_prob":0.5}"#, "token_id"),
        (r#"{"token_id":1,"rank":1,"prob":1.5,"cum_prob":1.5}"#, "prob"),
    ];
    for (rec, needle) in cases {
        let text = format!("{HEADER}\n{{\"doc_id\":\"x\",\"records\":[{rec}]}}\n");
        let out = read_all(&text);
        let err = out[0].as_ref().unwrap_err().to_string();
        assert!(err.contains(needle), "{rec}: {err}");
        assert!(err.contains("line 2"), "{err}");
    }
}

#[test]
fn stream_continues_after_a_bad_document() {
    let good = r#"{"doc_id":"g","records":[{"token_id":2,"rank":3,"prob":0.1,"cum_prob":0.8}]}"#;
    let bad = r#"{"doc_id":"b","records":[{"token_id":2,"rank":3,"prob":0.9,"cum_prob":0.1}]}"#;
    let out = read_all(&format!("{HEADER}\n{bad}\n\n{good}\n"));
    assert_eq!(out.len(), 2);
    assert!(out[0].is_err());
    assert_eq!(out[1].as_ref().unwrap().doc_id, "g");
}
