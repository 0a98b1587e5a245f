//! Seeded synthetic corpora with known ground truth, for tests, demos and
//! benchmarks. The same seed always yields byte-identical output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codebook::{AnnotationRecord, Dimension, Source};
use crate::corpus::{Language, RankBucket, RawRecord, WindowLabel};

pub const TRUTH_CODER: &str = "synth-truth";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    /// Each website gets an August and an October snapshot.
    pub websites: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { seed: 7, websites: 500 }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub records: Vec<RawRecord>,
    pub truth: Vec<AnnotationRecord>,
}

impl SynthCorpus {
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Ground truth in the human-annotation CSV layout.
    pub fn truth_csv(&self) -> String {
        let mut out = String::from("doc_id,coder_id");
        for d in Dimension::ALL {
            let _ = write!(out, ",{d}");
        }
        out.push('\n');
        for r in &self.truth {
            let _ = write!(out, "{},{}", r.doc_id, r.backend_id);
            for d in Dimension::ALL {
                let _ = write!(out, ",{}", r.value_label(d));
            }
            out.push('\n');
        }
        out
    }
}

struct Phrases {
    title: &'static [&'static str],
    intro: &'static [&'static str],
    contr: &'static [&'static str],
    purp: &'static [&'static str],
    rect: &'static [&'static str],
    forg: &'static [&'static str],
    port: &'static [&'static str],
    port_plain: &'static str,
    comp: &'static [&'static str],
    comp_plain: &'static str,
    hum: &'static [&'static str],
    filler: &'static [&'static str],
    gdpr: &'static [&'static str],
    fadp: &'static [&'static str],
    generator: &'static str,
    updated: &'static str,
    months: [&'static str; 12],
    page: &'static [&'static str],
}

const DE: Phrases = Phrases {
    title: &["Datenschutzerklärung", "Datenschutzhinweise"],
    intro: &[
        "Mit dieser Erklärung informieren wir Sie darüber, welche Personendaten wir beim Besuch unserer Website erheben und wie wir damit umgehen.",
        "Der verantwortungsvolle Umgang mit personenbezogenen Daten hat bei uns einen hohen Stellenwert, deshalb halten wir uns an die gesetzlichen Vorgaben.",
        "Nachfolgend erläutern wir, welche personenbezogenen Daten bei der Nutzung unseres Angebots anfallen.",
    ],
    contr: &["Verantwortlicher für die Bearbeitung ist die {company}, {street}, {city}. E-Mail: {email}, Telefon: {phone}."],
    purp: &[
        "Wir bearbeiten Ihre Daten zu folgenden Zwecken: Abwicklung von Bestellungen, Beantwortung von Anfragen und Verbesserung unseres Angebots.",
        "Die Daten werden ausschliesslich für den Zweck verwendet, für den Sie uns diese mitgeteilt haben.",
    ],
    rect: &["Sie haben jederzeit das Recht auf Auskunft über die zu Ihrer Person gespeicherten Daten und auf Berichtigung unrichtiger Angaben."],
    forg: &["Ausserdem können Sie die Löschung Ihrer Daten verlangen, sofern keine gesetzliche Aufbewahrungspflicht besteht."],
    port: &["Sie haben zudem ein Recht auf Datenübertragbarkeit."],
    port_plain: "Auf Wunsch händigen wir Ihnen Ihre Angaben in einem gängigen, maschinenlesbaren Format aus.",
    comp: &["Ihnen steht ein Beschwerderecht bei der zuständigen Aufsichtsbehörde zu."],
    comp_plain: "Bei Unklarheiten können Sie sich an den Eidgenössischen Datenschutz- und Öffentlichkeitsbeauftragten wenden.",
    hum: &["Eine automatisierte Entscheidungsfindung einschliesslich Profiling findet nicht statt."],
    filler: &[
        "Unsere Website verwendet Cookies, die nach dem Ende Ihrer Sitzung gelöscht werden. Sie können Ihren Browser so einstellen, dass Sie über das Setzen informiert werden.",
        "Beim Aufruf unserer Seiten speichert der Server automatisch Angaben wie Browsertyp, Betriebssystem und Uhrzeit der Anfrage in Protokolldateien.",
        "Wenn Sie unseren Newsletter abonnieren, benötigen wir Ihre E-Mail-Adresse. Die Einwilligung können Sie jederzeit über den Link in jeder Ausgabe widerrufen.",
        "Unsere Website wird bei einem externen Dienstleister gehostet, der die Daten nur nach unseren Weisungen bearbeitet.",
        "Für Zahlungen arbeiten wir mit spezialisierten Zahlungsdienstleistern zusammen, welche die nötigen Angaben direkt erhalten.",
        "Wir treffen angemessene technische und organisatorische Sicherheitsmassnahmen, um Ihre Daten vor Verlust und unbefugtem Zugriff zu schützen.",
    ],
    gdpr: &["Soweit anwendbar, stützen wir uns auf die DSGVO.", "Die Bearbeitung erfolgt im Einklang mit der Datenschutz-Grundverordnung (EU) 2016/679."],
    fadp: &["Wir beachten das Schweizer Datenschutzgesetz (DSG).", "Massgebend ist das revidierte Bundesgesetz über den Datenschutz (nDSG, SR 235.1)."],
    generator: "Erstellt mit {gen}.",
    updated: "Stand: {day}. {month} {year}",
    months: ["Januar", "Februar", "März", "April", "Mai", "Juni", "Juli", "August", "September", "Oktober", "November", "Dezember"],
    page: &[
        "Willkommen bei {company}! Seit vielen Jahren bieten wir Ihnen handverlesene Produkte aus der Region zu fairen Preisen an.",
        "Besuchen Sie unser Geschäft in {city} oder stöbern Sie bequem in unserem Sortiment. Wir freuen uns auf Ihren Besuch.",
        "Unsere Öffnungszeiten sind Montag bis Freitag von neun bis achtzehn Uhr und am Samstag bis sechzehn Uhr.",
    ],
};

const EN: Phrases = Phrases {
    title: &["Privacy Policy", "Privacy Notice"],
    intro: &[
        "This notice explains which personal data we collect when you visit our website and how we handle that information.",
        "We take the protection of your personal data seriously and treat it confidentially and in line with the statutory rules.",
        "The following sections describe what happens to your personal data when you use our services.",
    ],
    contr: &["The controller responsible for processing is {company}, {street}, {city}. Email: {email}, phone: {phone}."],
    purp: &[
        "We process your data for the following purposes: handling orders, answering enquiries and improving our services.",
        "Your data is only used for the purpose for which you provided it to us.",
    ],
    rect: &["You have the right of access to the data we hold about you and the right to rectification of inaccurate data."],
    forg: &["You may also request the erasure of your data unless we are legally obliged to keep it."],
    port: &["You also have the right to data portability."],
    port_plain: "On request we hand over your information in a common, machine-readable format.",
    comp: &["You have the right to lodge a complaint with a supervisory authority."],
    comp_plain: "If you are unhappy with how we handled your request, you may contact the competent regulator.",
    hum: &["We do not use automated decision-making, including profiling."],
    filler: &[
        "Our website uses cookies that are deleted when you close your browser. You can configure your browser to notify you when cookies are set.",
        "When you open our pages, the server automatically stores details such as browser type, operating system and time of the request in log files.",
        "If you subscribe to our newsletter we need your email address. You can withdraw your consent at any time using the link in each issue.",
        "Our website is hosted by an external provider who handles the data only on our instructions.",
        "For payments we work with specialised payment providers who receive the necessary details directly.",
        "We take appropriate technical and organisational security measures to protect your data against loss and unauthorised access.",
    ],
    gdpr: &["Where applicable, we rely on the GDPR.", "Processing complies with the General Data Protection Regulation."],
    fadp: &["We comply with the Swiss Federal Act on Data Protection.", "The Swiss Data Protection Act (SR 235.1) applies."],
    generator: "Created with {gen}.",
    updated: "Last updated: {month} {day}, {year}",
    months: ["January", "February", "March", "April", "May", "June", "July", "August", "September", "October", "November", "December"],
    page: &[
        "Welcome to {company}! For many years we have offered hand-picked products from the region at fair prices.",
        "Visit our shop in {city} or browse our range from the comfort of your home. We look forward to seeing you.",
        "We are open Monday to Friday from nine in the morning until six in the evening and on Saturdays until four.",
    ],
};

const FR: Phrases = Phrases {
    title: &["Politique de confidentialité", "Déclaration de protection des données"],
    intro: &[
        "La présente déclaration vous informe sur les données personnelles que nous collectons lors de votre visite sur notre site et sur la manière dont nous les utilisons.",
        "Nous accordons une grande importance à la protection des données et traitons vos informations de manière confidentielle.",
        "Les sections suivantes expliquent ce qu'il advient de vos données personnelles lorsque vous utilisez nos services.",
    ],
    contr: &["Le responsable du traitement est {company}, {street}, {city}. Courriel : {email}, téléphone : {phone}."],
    purp: &[
        "Nous traitons vos données pour les finalités suivantes : exécution des commandes, réponse aux demandes et amélioration de nos services.",
        "Vos données ne sont utilisées que pour la finalité pour laquelle vous nous les avez communiquées.",
    ],
    rect: &["Vous disposez d'un droit d'accès aux données vous concernant ainsi que d'un droit de rectification des données inexactes."],
    forg: &["Vous pouvez également demander l'effacement de vos données, sauf obligation légale de conservation."],
    port: &["Vous bénéficiez en outre d'un droit à la portabilité de vos données."],
    port_plain: "Sur demande, nous vous remettons vos informations dans un format courant et lisible par machine.",
    comp: &["Vous avez le droit d'introduire une réclamation auprès d'une autorité de contrôle."],
    comp_plain: "En cas de désaccord, vous pouvez vous adresser au préposé compétent.",
    hum: &["Nous ne recourons à aucune décision automatisée, y compris le profilage."],
    filler: &[
        "Notre site utilise des cookies qui sont supprimés à la fin de votre session. Vous pouvez configurer votre navigateur pour être averti de leur dépôt.",
        "Lors de la consultation de nos pages, le serveur enregistre automatiquement le type de navigateur, le système d'exploitation et l'heure de la requête.",
        "Si vous vous abonnez à notre lettre d'information, nous avons besoin de votre adresse électronique. Vous pouvez vous désabonner à tout moment.",
        "Notre site est hébergé par un prestataire externe qui traite les données uniquement selon nos instructions.",
        "Pour les paiements, nous collaborons avec des prestataires spécialisés qui reçoivent directement les informations nécessaires.",
        "Nous prenons des mesures de sécurité techniques et organisationnelles appropriées afin de protéger vos données contre la perte et les accès non autorisés.",
    ],
    gdpr: &["Le cas échéant, nous nous fondons sur le RGPD.", "Le traitement respecte le règlement général sur la protection des données."],
    fadp: &["Nous respectons la Loi fédérale sur la protection des données (LPD).", "La LPD révisée (RS 235.1) s'applique."],
    generator: "Créé avec {gen}.",
    updated: "Dernière mise à jour : {day} {month} {year}",
    months: ["janvier", "février", "mars", "avril", "mai", "juin", "juillet", "août", "septembre", "octobre", "novembre", "décembre"],
    page: &[
        "Bienvenue chez {company} ! Depuis de nombreuses années, nous vous proposons des produits régionaux soigneusement choisis à des prix équitables.",
        "Rendez-vous dans notre magasin à {city} ou parcourez notre assortiment depuis chez vous. Nous nous réjouissons de votre visite.",
        "Nous sommes ouverts du lundi au vendredi de neuf heures à dix-huit heures et le samedi jusqu'à seize heures.",
    ],
};

const IT: Phrases = Phrases {
    title: &["Informativa sulla privacy", "Informativa sul trattamento dei dati"],
    intro: &[
        "La presente informativa spiega quali dati personali raccogliamo quando visitate il nostro sito e come li utilizziamo.",
        "Attribuiamo grande importanza alla protezione dei dati e trattiamo le vostre informazioni in modo riservato.",
        "Nelle sezioni seguenti descriviamo che cosa succede ai vostri dati personali quando utilizzate i nostri servizi.",
    ],
    contr: &["Il titolare del trattamento è {company}, {street}, {city}. E-mail: {email}, telefono: {phone}."],
    purp: &[
        "Trattiamo i vostri dati per le seguenti finalità: gestione degli ordini, risposta alle richieste e miglioramento dei nostri servizi.",
        "I dati sono utilizzati esclusivamente per lo scopo per cui ce li avete comunicati.",
    ],
    rect: &["Avete il diritto di accesso ai dati che vi riguardano e il diritto di rettifica dei dati inesatti."],
    forg: &["Potete inoltre chiedere la cancellazione dei vostri dati, salvo obblighi legali di conservazione."],
    port: &["Avete inoltre diritto alla portabilità dei dati."],
    port_plain: "Su richiesta vi consegniamo le vostre informazioni in un formato di uso comune e leggibile da dispositivo automatico.",
    comp: &["Avete il diritto di proporre reclamo all'autorità di controllo competente."],
    comp_plain: "In caso di disaccordo potete rivolgervi all'incaricato competente.",
    hum: &["Non adottiamo alcun processo decisionale automatizzato, compresa la profilazione."],
    filler: &[
        "Il nostro sito utilizza cookie che vengono eliminati alla chiusura del browser. Potete impostare il browser in modo da essere avvisati.",
        "Quando aprite le nostre pagine, il server registra automaticamente il tipo di browser, il sistema operativo e l'ora della richiesta.",
        "Se vi iscrivete alla nostra newsletter abbiamo bisogno del vostro indirizzo e-mail. Potete revocare il consenso in qualsiasi momento.",
        "Il nostro sito è ospitato da un fornitore esterno che tratta i dati solo secondo le nostre istruzioni.",
        "Per i pagamenti collaboriamo con fornitori specializzati che ricevono direttamente le informazioni necessarie.",
        "Adottiamo misure di sicurezza tecniche e organizzative adeguate per proteggere i vostri dati da perdita e accessi non autorizzati.",
    ],
    gdpr: &["Ove applicabile, ci basiamo sul GDPR.", "Il trattamento è conforme al regolamento generale sulla protezione dei dati."],
    fadp: &["Rispettiamo la Legge federale sulla protezione dei dati (LPD).", "Si applica la LPD riveduta (RS 235.1)."],
    generator: "Creato con {gen}.",
    updated: "Ultimo aggiornamento: {day}/{month}/{year}",
    months: ["01", "02", "03", "04", "05", "06", "07", "08", "09", "10", "11", "12"],
    page: &[
        "Benvenuti da {company}! Da molti anni vi offriamo prodotti regionali selezionati a prezzi equi.",
        "Visitate il nostro negozio a {city} oppure sfogliate il nostro assortimento comodamente da casa.",
        "Siamo aperti dal lunedì al venerdì dalle nove alle diciotto e il sabato fino alle sedici.",
    ],
};

fn phrases(lang: Language) -> &'static Phrases {
    match lang {
        Language::De => &DE,
        Language::Fr => &FR,
        Language::It => &IT,
        _ => &EN,
    }
}

/// Attribution strings the bundled generator dictionary recognizes, with
/// sampling weights.
const GENERATORS: &[(&str, u32)] = &[
    ("SwissAnwalt", 30),
    ("Datenschutzpartner", 14),
    ("eRecht24", 10),
    ("PrivacyBee", 9),
    ("DGD Deutsche Gesellschaft für Datenschutz", 6),
    ("activeMind", 5),
    ("BrainBox", 5),
    ("Datenschutz-Generator.de von Dr. Thomas Schwenke", 4),
    ("AdSimple", 3),
    ("Weiß & Partner", 3),
    ("iubenda", 3),
    ("MeinDatenschutz", 2),
    ("LegallyOK", 2),
    ("Rechtstexter von Trusted Shops", 1),
];

const COMPANIES: &[&str] =
    &["Muster AG", "Alpenblick GmbH", "Seeland Handel", "Rossi Sagl", "Dupont SA", "Nordlicht KG", "Brightside Ltd"];
const STREETS: &[&str] = &["Bahnhofstrasse 12", "Via Roma 5", "Rue du Lac 8", "Hauptstrasse 41", "Market Street 3"];
const CITIES: &[&str] = &[
    "8001 Zürich",
    "3011 Bern",
    "6900 Lugano",
    "1201 Genève",
    "80331 München",
    "1010 Wien",
    "20121 Milano",
    "75001 Paris",
];

/// Per-group disclosure rates for contr, purp, rect, forg, port, comp, hum.
fn base_rates(tld: &str, eu_bucket: bool) -> [f64; 7] {
    match (tld, eu_bucket) {
        ("ch" | "swiss", false) => [0.73, 0.99, 0.75, 0.77, 0.46, 0.44, 0.16],
        ("ch" | "swiss", true) => [0.80, 0.98, 0.80, 0.82, 0.54, 0.53, 0.23],
        _ => [0.86, 0.99, 0.88, 0.90, 0.72, 0.74, 0.27],
    }
}

struct Site {
    domain: String,
    tld: String,
    buckets: BTreeMap<String, RankBucket>,
    language: Language,
    company: &'static str,
    street: &'static str,
    city: &'static str,
    email: String,
    phone: String,
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    xs.choose(rng).expect("non-empty")
}

fn weighted<'a>(rng: &mut ChaCha8Rng, xs: &'a [(&'a str, u32)]) -> &'a str {
    xs.choose_weighted(rng, |x| x.1).expect("weights").0
}

fn fill(template: &str, site: &Site) -> String {
    template
        .replace("{company}", site.company)
        .replace("{street}", site.street)
        .replace("{city}", site.city)
        .replace("{email}", &site.email)
        .replace("{phone}", &site.phone)
}

fn date_line(p: &Phrases, date: NaiveDate) -> String {
    use chrono::Datelike;
    p.updated
        .replace("{day}", &date.day().to_string())
        .replace("{month}", p.months[date.month0() as usize])
        .replace("{year}", &date.year().to_string())
}

fn make_site(rng: &mut ChaCha8Rng, i: usize) -> Site {
    let tld =
        weighted(rng, &[("ch", 45), ("swiss", 3), ("de", 15), ("at", 5), ("fr", 5), ("it", 7), ("com", 15), ("nl", 5)])
            .to_string();
    let mut buckets = BTreeMap::new();
    let home = match tld.as_str() {
        "ch" | "swiss" => "CH",
        "de" => "DE",
        "at" => "AT",
        "fr" => "FR",
        "it" => "IT",
        "nl" => "NL",
        _ => *pick(rng, &["US", "CH", "DE"]),
    };
    let bucket = |rng: &mut ChaCha8Rng| *pick(rng, &RankBucket::ALL[..8]);
    buckets.insert(home.to_string(), bucket(rng));
    let foreign_p = if matches!(tld.as_str(), "ch" | "swiss") { 0.35 } else { 0.2 };
    if rng.gen_bool(foreign_p) {
        let other = *pick(rng, &["DE", "AT", "FR", "IT", "CH", "US", "GB"]);
        buckets.entry(other.to_string()).or_insert_with(|| bucket(rng));
    }
    let language = match tld.as_str() {
        "ch" | "swiss" => {
            [(Language::De, 80), (Language::Fr, 10), (Language::It, 5), (Language::En, 5)]
                .choose_weighted(rng, |x| x.1)
                .expect("weights")
                .0
        }
        "de" | "at" => {
            if rng.gen_bool(0.85) {
                Language::De
            } else {
                Language::En
            }
        }
        "fr" => {
            if rng.gen_bool(0.85) {
                Language::Fr
            } else {
                Language::En
            }
        }
        "it" => {
            if rng.gen_bool(0.85) {
                Language::It
            } else {
                Language::En
            }
        }
        _ => {
            if rng.gen_bool(0.5) {
                Language::En
            } else {
                Language::De
            }
        }
    };
    let name = format!("site{i:04}");
    let domain = format!("{name}.{tld}");
    Site {
        email: format!("info@{domain}"),
        phone: format!(
            "+41 44 {:03} {:02} {:02}",
            rng.gen_range(100..999),
            rng.gen_range(10..99),
            rng.gen_range(10..99)
        ),
        domain,
        tld,
        buckets,
        language,
        company: pick(rng, COMPANIES),
        street: pick(rng, STREETS),
        city: pick(rng, CITIES),
    }
}

#[derive(Clone)]
struct PolicyState {
    flags: [bool; 7],
    plain: [bool; 7],
    updated: NaiveDate,
    gdpr: Option<usize>,
    fadp: Option<usize>,
    generators: Vec<&'static str>,
    fillers: Vec<usize>,
    intro: usize,
    purp_variant: usize,
}

fn render_policy(site: &Site, s: &PolicyState) -> String {
    let p = phrases(site.language);
    let mut parts: Vec<String> = vec![p.title[0].to_string(), p.intro[s.intro].to_string()];
    let clauses: [&[&str]; 7] = [p.contr, p.purp, p.rect, p.forg, p.port, p.comp, p.hum];
    let mut filler = s.fillers.iter();
    for (i, c) in clauses.iter().enumerate() {
        if s.flags[i] {
            let text = match i {
                1 => c[s.purp_variant % c.len()].to_string(),
                4 if s.plain[i] => p.port_plain.to_string(),
                5 if s.plain[i] => p.comp_plain.to_string(),
                _ => fill(c[0], site),
            };
            parts.push(text);
        }
        if let Some(f) = filler.next() {
            parts.push(p.filler[*f].to_string());
        }
    }
    if let Some(g) = s.gdpr {
        parts.push(p.gdpr[g].to_string());
    }
    if let Some(f) = s.fadp {
        parts.push(p.fadp[f].to_string());
    }
    for g in &s.generators {
        parts.push(p.generator.replace("{gen}", g));
    }
    parts.push(date_line(p, s.updated));
    parts.join("\n\n")
}

fn render_page(site: &Site, rng: &mut ChaCha8Rng) -> String {
    let p = phrases(site.language);
    let mut lines: Vec<String> = p.page.iter().map(|l| fill(l, site)).collect();
    lines.shuffle(rng);
    lines.join("\n")
}

fn truth_record(doc_id: &str, state: Option<&PolicyState>) -> AnnotationRecord {
    let mut r = AnnotationRecord::empty(doc_id, Source::Human, TRUTH_CODER);
    if let Some(s) = state {
        r.ispol = true;
        for (i, d) in Dimension::OBLIGATIONS.iter().enumerate() {
            r.set_flag(*d, s.flags[i]);
        }
        r.upd = Some(s.updated);
    }
    r
}

fn random_date(rng: &mut ChaCha8Rng, from: NaiveDate, days: i64) -> NaiveDate {
    from + Duration::days(rng.gen_range(0..days))
}

fn initial_policy(rng: &mut ChaCha8Rng, site: &Site) -> PolicyState {
    let eu_bucket = site.buckets.keys().any(|c| crate::cohort::EU_COUNTRIES.contains(&c.as_str()));
    let rates = base_rates(&site.tld, eu_bucket);
    let swiss = matches!(site.tld.as_str(), "ch" | "swiss");
    let generator_p = if swiss { 0.18 } else { 0.05 };
    let mut generators = Vec::new();
    if rng.gen_bool(generator_p) {
        let g = weighted(rng, GENERATORS);
        generators.push(g);
        if g.starts_with("DGD") && rng.gen_bool(0.5) {
            generators.push("Weiß & Partner");
        }
    }
    let p = phrases(site.language);
    PolicyState {
        flags: rates.map(|r| rng.gen_bool(r)),
        plain: [0; 7].map(|_| rng.gen_bool(0.08)),
        updated: random_date(rng, NaiveDate::from_ymd_opt(2020, 1, 1).expect("date"), 1300),
        gdpr: rng.gen_bool(if swiss { 0.6 } else { 0.75 }).then(|| rng.gen_range(0..p.gdpr.len())),
        fadp: rng.gen_bool(if swiss { 0.35 } else { 0.05 }).then(|| rng.gen_range(0..p.fadp.len())),
        generators,
        fillers: (0..rng.gen_range(2..7)).map(|_| rng.gen_range(0..p.filler.len())).collect(),
        intro: rng.gen_range(0..p.intro.len()),
        purp_variant: rng.gen_range(0..2),
    }
}

/// October revision: Swiss-facing sites update more often and add the
/// clauses they were missing.
fn revise(rng: &mut ChaCha8Rng, site: &Site, mut s: PolicyState) -> PolicyState {
    let swiss = matches!(site.tld.as_str(), "ch" | "swiss");
    let update_p = if swiss { 0.35 } else { 0.05 };
    if !rng.gen_bool(update_p) {
        return s;
    }
    for i in 0..7 {
        if !s.flags[i] && rng.gen_bool(if swiss { 0.5 } else { 0.1 }) {
            s.flags[i] = true;
        }
    }
    if swiss && s.fadp.is_none() && rng.gen_bool(0.5) {
        s.fadp = Some(1);
    }
    let p = phrases(site.language);
    if rng.gen_bool(0.5) {
        s.fillers.push(rng.gen_range(0..p.filler.len()));
    }
    s.updated = random_date(rng, NaiveDate::from_ymd_opt(2023, 8, 20).expect("date"), 40);
    s
}

pub fn generate(config: &SynthConfig) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut records = Vec::new();
    let mut truth = Vec::new();
    let aug = NaiveDate::from_ymd_opt(2023, 8, 1).expect("date");
    let oct = NaiveDate::from_ymd_opt(2023, 10, 1).expect("date");
    for i in 0..config.websites {
        let site = make_site(&mut rng, i);
        let aug_policy = rng.gen_bool(0.7).then(|| initial_policy(&mut rng, &site));
        let oct_policy = match &aug_policy {
            Some(s) => Some(revise(&mut rng, &site, s.clone())),
            None => rng.gen_bool(0.1).then(|| {
                let mut s = initial_policy(&mut rng, &site);
                s.updated = random_date(&mut rng, NaiveDate::from_ymd_opt(2023, 8, 20).expect("date"), 40);
                s
            }),
        };
        for (label, window, start, state) in [
            ("aug", WindowLabel::Aug2023, aug, aug_policy.as_ref()),
            ("oct", WindowLabel::Oct2023, oct, oct_policy.as_ref()),
        ] {
            let doc_id = format!("{}-{label}", site.domain);
            let text = match state {
                Some(s) => render_policy(&site, s),
                None => render_page(&site, &mut rng),
            };
            records.push(RawRecord {
                doc_id: doc_id.clone(),
                domain: site.domain.clone(),
                tld: site.tld.clone(),
                rank_buckets: site.buckets.clone(),
                snapshot_id: format!("{label}-{i:04}"),
                window_label: window,
                capture_date: random_date(&mut rng, start, 14),
                text,
            });
            truth.push(truth_record(&doc_id, state));
        }
    }
    SynthCorpus { records, truth }
}

/// A standalone policy-like text in `lang`, for classifier checks.
pub fn sample_text(lang: Language, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut site = make_site(&mut rng, seed as usize % 10_000);
    site.language = lang;
    if rng.gen_bool(0.2) {
        render_page(&site, &mut rng)
    } else {
        render_policy(&site, &initial_policy(&mut rng, &site))
    }
}
